#include "vground/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "vground/checkpoint.hpp"
#include "vground/config.hpp"
#include "vground/data.hpp"
#include "vground/error.hpp"
#include "vground/metrics.hpp"
#include "vground/optim.hpp"
#include "vground/pipeline.hpp"
#include "vground/trainer.hpp"
#include "vground/util.hpp"

namespace vground {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string run_root() {
    const char* env = std::getenv("VGROUND_RUN_ROOT");
    return env && *env ? env : "runs";
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

Vocabulary load_vocab(const Config& cfg) {
    if (cfg.data.vocab_file.empty()) return Vocabulary::builtin();
    return Vocabulary::from_file(cfg.data.vocab_file);
}

EmotionClassifier make_classifier(const Config& cfg) {
    if (cfg.emotion.mode == "external")
        return EmotionClassifier(EmotionClassifier::Mode::External,
                                 make_http_emotion_transport(cfg.emotion.url),
                                 std::chrono::milliseconds(cfg.emotion.timeout_ms));
    return EmotionClassifier();
}

void apply_split_from_config(Dataset& ds, const Config& cfg) {
    split_dataset(ds, cfg.data.train_frac, cfg.data.val_frac, cfg.data.test_frac,
                  cfg.data.split_seed);
}

std::optional<SubsetTag> parse_subset(const std::string& s) {
    if (s.empty() || s == "all") return std::nullopt;
    if (s == "normal") return SubsetTag::Normal;
    if (s == "long-text" || s == "long_text") return SubsetTag::LongText;
    if (s == "restricted") return SubsetTag::Restricted;
    if (s == "multi-agent" || s == "multi_agent") return SubsetTag::MultiAgent;
    if (s == "ambiguous-command" || s == "ambiguous" || s == "ambiguous_command")
        return SubsetTag::AmbiguousCommand;
    throw ValidationError("unknown subset: " + s);
}

Split parse_split(const std::string& s) {
    if (s == "none" || s.empty()) return Split::None;
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw ValidationError("unknown split: " + s);
}

const SceneSample& find_scene(const Dataset& ds, const std::string& id) {
    for (const auto& s : ds.samples)
        if (s.scene.id == id) return s;
    throw ValidationError("unknown scene id: " + id);
}

void check_compat(const Config& cfg, const Dataset& ds) {
    if (ds.samples.empty()) return;
    const Scene& sc = ds.samples[0].scene;
    const size_t fw = sc.regions.empty() ? 0 : sc.regions[0].features.size();
    if (fw != cfg.model.d_vision)
        throw ValidationError("checkpoint/dataset mismatch: model d_vision=" +
                              std::to_string(cfg.model.d_vision) + " vs dataset feature width=" +
                              std::to_string(fw));
    if (sc.patch_width != cfg.model.patch_width || sc.patch_grid != cfg.model.patch_grid)
        throw ValidationError(
            "checkpoint/dataset mismatch: model patch grid/width=" + std::to_string(cfg.model.patch_grid) +
            "/" + std::to_string(cfg.model.patch_width) + " vs dataset=" + std::to_string(sc.patch_grid) +
            "/" + std::to_string(sc.patch_width));
}

// ---- subcommands ----

struct GenArgs {
    std::string out;
    uint64_t seed = 7;
    size_t count = 64;
    GenParams params;
};

int cmd_gen(const GenArgs& a) {
    if (a.count < 1) throw ValidationError("gen: count must be >= 1");
    Dataset ds = generate_dataset(a.seed, a.count, a.params, Vocabulary::builtin());
    if (!a.out.empty()) {
        if (a.out.find('/') != std::string::npos)
            ensure_dir(fs::path(a.out).parent_path().string());
        save_dataset(ds, a.out);
        std::cout << "dataset " << a.out << " scenes " << a.count << " digest "
                  << file_digest(a.out) << "\n";
    }
    return 0;
}

struct TrainArgs {
    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::vector<std::pair<std::string, std::string>> overrides;
};

int cmd_train(const TrainArgs& a) {
    Config cfg;
    if (!a.config_path.empty()) cfg = Config::parse(read_file(a.config_path));
    for (const auto& [k, v] : a.overrides) cfg.set_key(k, v);
    cfg.validate();

    const Vocabulary vocab = load_vocab(cfg);
    Dataset ds = load_dataset(a.data_path, vocab, cfg.model.max_tokens);
    check_compat(cfg, ds);
    apply_split_from_config(ds, cfg);

    const std::string snapshot = cfg.serialize();
    std::string out_dir = a.out_dir;
    if (out_dir.empty())
        out_dir = run_root() + "/train-" + digest_hex(snapshot).substr(0, 8) + "-" +
                  ds.digest.substr(0, 8);
    ensure_dir(out_dir);
    write_file(out_dir + "/config.cfg", snapshot);

    TrainOutcome outcome = train(cfg, ds, vocab);
    write_file(out_dir + "/train_log.jsonl", outcome.log_text);
    save_checkpoint(out_dir + "/checkpoint_final.vgck", cfg, outcome.final_model);
    save_checkpoint(out_dir + "/checkpoint_best.vgck", cfg, outcome.best_model);

    json meta;
    meta["config_digest"] = digest_hex(snapshot);
    meta["dataset_digest"] = ds.digest;
    meta["checkpoint_final_digest"] = file_digest(out_dir + "/checkpoint_final.vgck");
    meta["checkpoint_best_digest"] = file_digest(out_dir + "/checkpoint_best.vgck");
    meta["steps"] = outcome.steps;
    if (outcome.final_train_ap50 >= 0) meta["final_train_ap50"] = outcome.final_train_ap50;
    if (outcome.best_val_ap50 >= 0) meta["best_val_ap50"] = outcome.best_val_ap50;
    write_file(out_dir + "/meta.json", meta.dump(2) + "\n");

    std::cout << "run " << out_dir << " steps " << outcome.steps;
    if (outcome.final_train_ap50 >= 0) std::cout << " train_ap50 " << outcome.final_train_ap50;
    if (outcome.best_val_ap50 >= 0) std::cout << " best_val_ap50 " << outcome.best_val_ap50;
    std::cout << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string data_path;
    std::string subset;
    std::string split = "none";
    std::string out;
    size_t threads = 0;
};

int cmd_eval(const EvalArgs& a) {
    LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    const Vocabulary vocab = load_vocab(ck.config);
    Dataset ds = load_dataset(a.data_path, vocab, ck.config.model.max_tokens);
    check_compat(ck.config, ds);
    const Split split = parse_split(a.split);
    if (split != Split::None) apply_split_from_config(ds, ck.config);

    MetricsReport rep = evaluate(ck.model, ds, split, parse_subset(a.subset), a.threads);
    rep.meta.checkpoint_digest = file_digest(a.checkpoint);
    rep.meta.dataset_digest = ds.digest;

    std::cout << rep.table();
    if (!a.out.empty()) {
        if (a.out.find('/') != std::string::npos)
            ensure_dir(fs::path(a.out).parent_path().string());
        // wall clock stays out of the file so identical inputs give identical bytes
        write_file(a.out, rep.to_json(false));
        std::cout << "report " << a.out << "\n";
    }
    return 0;
}

struct PredictArgs {
    std::string checkpoint;
    std::string data_path;
    std::string scene_id;
    std::string command_text;
    size_t k = 1;
    std::string out;
    std::vector<std::pair<std::string, std::string>> overrides;
};

int cmd_predict(const PredictArgs& a) {
    LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    for (const auto& [key, v] : a.overrides) ck.config.set_key(key, v);
    ck.config.validate();
    const Vocabulary vocab = load_vocab(ck.config);
    Dataset ds = load_dataset(a.data_path, vocab, ck.config.model.max_tokens);
    check_compat(ck.config, ds);
    const SceneSample& sample = find_scene(ds, a.scene_id);

    Command command = sample.command;
    const EmotionClassifier classifier = make_classifier(ck.config);
    if (!a.command_text.empty())
        command = make_command(a.command_text, vocab, ck.config.model.max_tokens, classifier);
    else if (ck.config.emotion.mode == "external")
        command.emotion = classifier.classify(command.raw_text);

    Prediction p = predict(ck.model, sample.scene, command, a.k);
    std::cout << "scene " << p.scene_id << " emotion " << emotion_label(p.emotion) << "\n";
    std::cout << "selected_box " << p.selected_box.x1 << " " << p.selected_box.y1 << " "
              << p.selected_box.x2 << " " << p.selected_box.y2 << "\n";
    std::cout << "rank\tregion\tcredibility\n";
    for (size_t i = 0; i < p.top_k.size(); ++i)
        std::cout << i << "\t" << p.top_k[i] << "\t" << format_double(p.credibility[p.top_k[i]])
                  << "\n";
    if (!a.out.empty()) {
        if (a.out.find('/') != std::string::npos)
            ensure_dir(fs::path(a.out).parent_path().string());
        json doc = json::parse(p.to_json());
        doc["run_meta"] = {{"checkpoint_digest", file_digest(a.checkpoint)},
                           {"dataset_digest", ds.digest}};
        write_file(a.out, doc.dump(2) + "\n");
    }
    return 0;
}

struct InspectArgs {
    std::string checkpoint;
    std::string data_path;
    std::string scene_id;
    std::string command_text;
    std::string out;
    std::string table_out;
};

int cmd_inspect(const InspectArgs& a) {
    LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    const Vocabulary vocab = load_vocab(ck.config);
    Dataset ds = load_dataset(a.data_path, vocab, ck.config.model.max_tokens);
    check_compat(ck.config, ds);
    const SceneSample& sample = find_scene(ds, a.scene_id);

    Command command = sample.command;
    if (!a.command_text.empty())
        command = make_command(a.command_text, vocab, ck.config.model.max_tokens);

    AttentionDump dump = dump_layer_attention(ck.model, sample.scene, command, vocab);
    std::cout << dump.plot_table();
    if (!a.out.empty()) {
        if (a.out.find('/') != std::string::npos)
            ensure_dir(fs::path(a.out).parent_path().string());
        json doc = json::parse(dump.to_json());
        doc["run_meta"] = {{"checkpoint_digest", file_digest(a.checkpoint)},
                           {"dataset_digest", ds.digest}};
        write_file(a.out, doc.dump(2) + "\n");
    }
    if (!a.table_out.empty()) {
        if (a.table_out.find('/') != std::string::npos)
            ensure_dir(fs::path(a.table_out).parent_path().string());
        write_file(a.table_out, dump.plot_table());
    }
    return 0;
}

void add_override_flag(CLI::App* cmd, std::vector<std::pair<std::string, std::string>>& overrides,
                       const std::string& flag, const std::string& key) {
    cmd->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); });
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"synthetic-scene visual grounding: train, evaluate, predict, inspect"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* cgen = app.add_subcommand("gen", "generate a synthetic dataset file");
    cgen->add_option("--out", gen.out, "output dataset path")->required();
    cgen->add_option("--seed", gen.seed, "generator seed");
    cgen->add_option("--count", gen.count, "number of scenes");
    cgen->add_option("--regions", gen.params.n_regions, "regions per scene");
    cgen->add_option("--patch-grid", gen.params.patch_grid, "patches per image side");
    cgen->add_option("--patch-width", gen.params.patch_width, "patch feature width");
    cgen->add_option("--feature-width", gen.params.feature_width, "region feature width");
    cgen->add_option("--colors", gen.params.colors, "color alphabet size");
    cgen->add_option("--kinds", gen.params.kinds, "object kind alphabet size");
    cgen->add_option("--overlap-rate", gen.params.overlap_rate, "color+kind twin distractor rate");
    cgen->add_flag("--emotion-templates", gen.params.emotion_templates,
                   "wrap commands in urgent/commanding/informative styles");
    cgen->add_option("--long-text-rate", gen.params.long_text_rate, "rate of >23-word commands");
    cgen->add_option("--image-w", gen.params.image_w, "image width");
    cgen->add_option("--image-h", gen.params.image_h, "image height");

    TrainArgs tr;
    auto* ctrain = app.add_subcommand("train", "train a model");
    ctrain->add_option("--config", tr.config_path, "config file (flat key=value)");
    ctrain->add_option("--data", tr.data_path, "dataset file")->required();
    ctrain->add_option("--out", tr.out_dir, "run directory (default under $VGROUND_RUN_ROOT)");
    add_override_flag(ctrain, tr.overrides, "--epochs", "train.epochs");
    add_override_flag(ctrain, tr.overrides, "--batch-size", "train.batch_size");
    add_override_flag(ctrain, tr.overrides, "--lr", "train.lr");
    add_override_flag(ctrain, tr.overrides, "--seed", "train.seed");
    add_override_flag(ctrain, tr.overrides, "--fraction", "train.fraction");
    add_override_flag(ctrain, tr.overrides, "--max-steps", "train.max_steps");
    add_override_flag(ctrain, tr.overrides, "--emotion-mode", "emotion.mode");
    add_override_flag(ctrain, tr.overrides, "--emotion-url", "emotion.url");
    add_override_flag(ctrain, tr.overrides, "--train-frac", "data.train_frac");
    add_override_flag(ctrain, tr.overrides, "--val-frac", "data.val_frac");
    add_override_flag(ctrain, tr.overrides, "--test-frac", "data.test_frac");

    EvalArgs ev;
    auto* ceval = app.add_subcommand("eval", "evaluate a checkpoint");
    ceval->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
    ceval->add_option("--data", ev.data_path, "dataset file")->required();
    ceval->add_option("--subset", ev.subset,
                      "normal|long-text|restricted|multi-agent|ambiguous-command|all");
    ceval->add_option("--split", ev.split, "none|train|val|test");
    ceval->add_option("--out", ev.out, "report JSON path");
    ceval->add_option("--threads", ev.threads, "evaluation threads (0 = auto)");

    PredictArgs pr;
    auto* cpredict = app.add_subcommand("predict", "ground one command in one scene");
    cpredict->add_option("--checkpoint", pr.checkpoint, "checkpoint file")->required();
    cpredict->add_option("--data", pr.data_path, "dataset file")->required();
    cpredict->add_option("--scene-id", pr.scene_id, "scene id")->required();
    cpredict->add_option("--command", pr.command_text, "override command text");
    cpredict->add_option("--k", pr.k, "report the top-k regions");
    cpredict->add_option("--out", pr.out, "prediction JSON path");
    add_override_flag(cpredict, pr.overrides, "--emotion-mode", "emotion.mode");
    add_override_flag(cpredict, pr.overrides, "--emotion-url", "emotion.url");

    InspectArgs in;
    auto* cinspect = app.add_subcommand("inspect", "dump layer and cross-modal attention weights");
    cinspect->add_option("--checkpoint", in.checkpoint, "checkpoint file")->required();
    cinspect->add_option("--data", in.data_path, "dataset file")->required();
    cinspect->add_option("--scene-id", in.scene_id, "scene id")->required();
    cinspect->add_option("--command", in.command_text, "override command text");
    cinspect->add_option("--out", in.out, "dump JSON path");
    cinspect->add_option("--table", in.table_out, "plot-ready TSV path");

    std::vector<const char*> argv;
    argv.push_back("vground");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (cgen->parsed()) return cmd_gen(gen);
        if (ctrain->parsed()) return cmd_train(tr);
        if (ceval->parsed()) return cmd_eval(ev);
        if (cpredict->parsed()) return cmd_predict(pr);
        if (cinspect->parsed()) return cmd_inspect(in);
        return 1;
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace vground
