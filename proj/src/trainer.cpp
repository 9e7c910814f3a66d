#include "vground/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vground/error.hpp"
#include "vground/optim.hpp"
#include "vground/pipeline.hpp"
#include "vground/text.hpp"
#include "vground/util.hpp"

namespace vground {

using nlohmann::json;

std::vector<double> make_targets(const Scene& scene) {
    const size_t n = scene.regions.size();
    std::vector<double> labels(n, 0.0);
    double best = -1.0;
    size_t best_idx = 0;
    bool any = false;
    for (size_t i = 0; i < n; ++i) {
        const double v = iou(scene.regions[i].box, scene.gt_box);
        if (v >= 0.5) {
            labels[i] = 1.0;
            any = true;
        }
        if (v > best) {
            best = v;
            best_idx = i;
        }
    }
    if (!any) labels[best_idx] = 1.0;
    return labels;
}

double ap50_over(const ModelState& m, const Dataset& ds, const std::vector<size_t>& indices,
                 size_t threads) {
    if (indices.empty()) throw ValidationError("ap50_over: empty index list");
    std::vector<uint8_t> hits(indices.size(), 0);
    auto work = [&](size_t slot) {
        const auto& s = ds.samples[indices[slot]];
        Prediction p = predict(m, s.scene, s.command, 1);
        hits[slot] = iou(p.selected_box, s.scene.gt_box) > 0.5 ? 1 : 0;
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, indices.size());
    if (threads <= 1 || indices.size() < 16) {
        for (size_t i = 0; i < indices.size(); ++i) work(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < indices.size(); i = next.fetch_add(1)) work(i);
            });
        for (auto& th : pool) th.join();
    }
    size_t total = 0;
    for (uint8_t h : hits) total += h;
    return static_cast<double>(total) / static_cast<double>(indices.size());
}

TrainOutcome train(const Config& cfg, const Dataset& ds, const Vocabulary& vocab) {
    (void)vocab;
    cfg.validate();
    if (ds.samples.empty()) throw ValidationError("train: empty dataset");

    // Training pool: the train split when labels exist, otherwise everything.
    std::vector<size_t> pool =
        ds.split.empty() ? std::vector<size_t>() : ds.indices_of(Split::Train);
    if (ds.split.empty()) {
        pool.resize(ds.samples.size());
        for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    }
    if (pool.empty()) throw ValidationError("train: empty training split");
    std::vector<size_t> val_idx = ds.split.empty() ? std::vector<size_t>() : ds.indices_of(Split::Val);

    Rng seed_rng(cfg.train.seed);
    // Fraction subsample: seeded shuffle prefix, so smaller fractions nest
    // inside larger ones under the same seed.
    {
        Rng frac_rng = seed_rng.split(1001);
        frac_rng.shuffle(pool);
        const size_t keep = std::max<size_t>(
            1, static_cast<size_t>(std::floor(static_cast<double>(pool.size()) * cfg.train.fraction)));
        pool.resize(keep);
        std::sort(pool.begin(), pool.end());
    }

    ModelState model = ModelState::init(cfg.model, seed_rng.derive(1));
    for (const auto& s : ds.samples) {
        if (!s.scene.regions.empty() && s.scene.regions[0].features.size() != cfg.model.d_vision)
            throw ValidationError("train: dataset feature width " +
                                  std::to_string(s.scene.regions[0].features.size()) +
                                  " does not match model d_vision " + std::to_string(cfg.model.d_vision));
        break;
    }

    auto params = model.parameters();
    if (cfg.emotion.freeze_embed) {
        params.erase(std::remove_if(params.begin(), params.end(),
                                    [](const auto& p) { return p.first == "emotion.embed"; }),
                     params.end());
    }
    AdamW opt(params, {cfg.optim.beta1, cfg.optim.beta2, cfg.optim.eps, cfg.optim.weight_decay});

    const size_t steps_per_epoch =
        (pool.size() + cfg.train.batch_size - 1) / cfg.train.batch_size;
    const size_t t0 = cfg.sched.t0 ? cfg.sched.t0 : steps_per_epoch;

    std::ostringstream log;
    json header;
    header["type"] = "run";
    header["config"] = cfg.serialize();
    header["config_digest"] = digest_hex(cfg.serialize());
    header["dataset_digest"] = ds.digest;
    header["seed"] = cfg.train.seed;
    header["train_size"] = pool.size();
    header["val_size"] = val_idx.size();
    log << header.dump() << "\n";

    // Pre-computed targets for the training pool.
    std::vector<std::vector<double>> targets(ds.samples.size());
    for (size_t idx : pool) targets[idx] = make_targets(ds.samples[idx].scene);

    TrainOutcome out;
    out.train_indices = pool;
    out.best_val_ap50 = -1;
    size_t global_step = 0;
    bool stop = false;
    ModelState best = model.clone();
    double final_train_ap50 = -1;

    for (size_t epoch = 0; epoch < cfg.train.epochs && !stop; ++epoch) {
        std::vector<size_t> order = pool;
        Rng epoch_rng = seed_rng.split(2000 + epoch);
        epoch_rng.shuffle(order);

        for (size_t b = 0; b < order.size() && !stop; b += cfg.train.batch_size) {
            const size_t bend = std::min(order.size(), b + cfg.train.batch_size);
            // Pad command tokens to the batch max; pads are masked in every
            // attention softmax downstream.
            size_t max_tok = 0;
            for (size_t i = b; i < bend; ++i)
                max_tok = std::max(max_tok, ds.samples[order[i]].command.tokens.size());

            model.zero_grads();
            Tensor loss;
            for (size_t i = b; i < bend; ++i) {
                const auto& sample = ds.samples[order[i]];
                Command padded = sample.command;
                padded.tokens.resize(max_tok, Vocabulary::kPad);
                ForwardResult r = forward_scene(model, sample.scene, padded);
                Tensor probs = sigmoid(r.logits);
                Tensor t(
                    {targets[order[i]].size(), 1},
                    std::vector<double>(targets[order[i]].begin(), targets[order[i]].end()));
                Tensor scene_loss = bce_loss(probs, t);
                loss = i == b ? scene_loss : add(loss, scene_loss);
            }
            loss = scale(loss, 1.0 / static_cast<double>(bend - b));
            const double loss_v = loss.item();
            if (!std::isfinite(loss_v)) {
                std::string ids;
                for (size_t i = b; i < bend; ++i) ids += (i == b ? "" : ",") + ds.samples[order[i]].scene.id;
                throw NumericError("train: non-finite loss at step " + std::to_string(global_step) +
                                   " on scenes " + ids);
            }
            backward(loss);
            const double grad_norm = opt.clip_grad_norm(cfg.train.clip_norm);
            const double lr =
                lr_schedule(global_step, t0, cfg.sched.t_mult, cfg.sched.lr_min, cfg.train.lr);
            opt.step(lr);

            json rec;
            rec["type"] = "step";
            rec["step"] = global_step;
            rec["epoch"] = epoch;
            rec["loss"] = loss_v;
            rec["lr"] = lr;
            rec["grad_norm"] = grad_norm;
            log << rec.dump() << "\n";

            ++global_step;
            if (cfg.train.max_steps && global_step >= cfg.train.max_steps) stop = true;
        }

        json erec;
        erec["type"] = "epoch";
        erec["epoch"] = epoch;
        if (cfg.train.eval_train) {
            final_train_ap50 = ap50_over(model, ds, pool);
            erec["train_ap50"] = final_train_ap50;
        }
        if (!val_idx.empty()) {
            const double val = ap50_over(model, ds, val_idx);
            erec["val_ap50"] = val;
            if (val > out.best_val_ap50) {
                out.best_val_ap50 = val;
                best = model.clone();
            }
        }
        log << erec.dump() << "\n";
        if (cfg.train.eval_train && cfg.train.early_stop_ap50 > 0 &&
            final_train_ap50 >= cfg.train.early_stop_ap50)
            stop = true;
    }

    out.final_model = model.clone();
    out.best_model = val_idx.empty() ? model.clone() : std::move(best);
    out.final_train_ap50 = final_train_ap50;
    out.steps = global_step;
    out.log_text = log.str();
    return out;
}

ReducedDataSuite run_reduced_data_suite(const Config& cfg, const Dataset& ds, const Vocabulary& vocab) {
    if (ds.split.empty() || ds.indices_of(Split::Test).empty())
        throw ValidationError("reduced-data suite: dataset needs a non-empty test split");
    ReducedDataSuite suite;
    suite.test_digest = ds.digest;
    for (double fraction : {0.5, 0.75, 1.0}) {
        ReducedDataRun run;
        run.fraction = fraction;
        Config c = cfg;
        c.train.fraction = fraction;
        try {
            TrainOutcome outcome = train(c, ds, vocab);
            run.train_size = outcome.train_indices.size();
            MetricsReport rep = evaluate(outcome.best_model, ds, Split::Test);
            rep.meta.dataset_digest = ds.digest;
            run.report = std::move(rep);
        } catch (const std::exception& e) {
            run.error = e.what();
        }
        suite.runs.push_back(std::move(run));
    }
    return suite;
}

}  // namespace vground
