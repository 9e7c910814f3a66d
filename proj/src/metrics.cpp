#include "vground/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vground/error.hpp"
#include "vground/pipeline.hpp"
#include "vground/text.hpp"
#include "vground/util.hpp"

namespace vground {

double iou(const Box& a, const Box& b) {
    if (!a.valid() || !b.valid()) throw ValidationError("iou: degenerate box (requires x1<x2, y1<y2)");
    const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

double ap50(const std::vector<std::pair<Box, Box>>& predicted_vs_gt) {
    if (predicted_vs_gt.empty()) throw ValidationError("ap50: empty prediction list");
    size_t hits = 0;
    for (const auto& [pred, gt] : predicted_vs_gt)
        if (iou(pred, gt) > 0.5) ++hits;  // strict: exactly 0.5 counts as a miss
    return static_cast<double>(hits) / static_cast<double>(predicted_vs_gt.size());
}

std::string MetricsReport::to_json(bool include_wall_clock) const {
    nlohmann::json j;
    j["overall_ap50"] = overall_ap50;
    j["mean_iou"] = mean_iou;
    j["count"] = count;
    nlohmann::json subsets = nlohmann::json::object();
    for (const auto& [tag, value] : per_subset_ap50) {
        subsets[subset_key(tag)] = {{"ap50", value}, {"count", per_subset_count.at(tag)}};
    }
    j["per_subset"] = subsets;
    j["run_meta"] = {{"checkpoint_digest", meta.checkpoint_digest},
                     {"dataset_digest", meta.dataset_digest}};
    if (include_wall_clock) j["run_meta"]["wall_clock_ms"] = meta.wall_clock_ms;
    return j.dump(2) + "\n";
}

std::string MetricsReport::table() const {
    static const SubsetTag order[] = {SubsetTag::Normal, SubsetTag::Restricted, SubsetTag::MultiAgent,
                                      SubsetTag::AmbiguousCommand, SubsetTag::LongText};
    std::ostringstream os;
    os << "subset              ap50    count\n";
    {
        std::ostringstream v;
        v.precision(4);
        v << std::fixed << overall_ap50;
        os << "Overall             " << v.str() << "  " << count << "\n";
    }
    for (SubsetTag t : order) {
        std::string name = subset_name(t);
        name.resize(18, ' ');
        auto it = per_subset_ap50.find(t);
        if (it == per_subset_ap50.end()) {
            os << name << "  -       0\n";
        } else {
            std::ostringstream v;
            v.precision(4);
            v << std::fixed << it->second;
            os << name << "  " << v.str() << "  " << per_subset_count.at(t) << "\n";
        }
    }
    return os.str();
}

MetricsReport evaluate(const ModelState& m, const Dataset& ds, Split split,
                       std::optional<SubsetTag> subset_filter, size_t threads) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto tags = tag_subsets(ds);

    std::vector<size_t> indices;
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        if (split != Split::None && (i >= ds.split.size() || ds.split[i] != split)) continue;
        if (subset_filter && !has_tag(tags[i], *subset_filter)) continue;
        indices.push_back(i);
    }

    MetricsReport rep;
    rep.meta.dataset_digest = ds.digest;
    rep.count = indices.size();
    if (indices.empty()) {
        // Absent cells rather than fabricated zeros.
        return rep;
    }

    std::vector<double> ious(indices.size());
    auto work = [&](size_t slot) {
        const auto& s = ds.samples[indices[slot]];
        Prediction p = predict(m, s.scene, s.command, 1);
        ious[slot] = iou(p.selected_box, s.scene.gt_box);
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, indices.size());
    if (threads <= 1 || indices.size() < 32) {
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

    // Deterministic reduction in index order.
    std::map<SubsetTag, size_t> hits;
    double iou_sum = 0;
    size_t hit_total = 0;
    for (size_t slot = 0; slot < indices.size(); ++slot) {
        const bool hit = ious[slot] > 0.5;
        iou_sum += ious[slot];
        hit_total += hit ? 1 : 0;
        for (SubsetTag t : tags[indices[slot]]) {
            rep.per_subset_count[t] += 1;
            hits[t] += hit ? 1 : 0;
        }
    }
    rep.overall_ap50 = static_cast<double>(hit_total) / static_cast<double>(indices.size());
    rep.mean_iou = iou_sum / static_cast<double>(indices.size());
    for (const auto& [tag, cnt] : rep.per_subset_count)
        rep.per_subset_ap50[tag] = static_cast<double>(hits[tag]) / static_cast<double>(cnt);

    rep.meta.wall_clock_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
    return rep;
}

AttentionDump dump_layer_attention(const ModelState& m, const Scene& scene, const Command& command,
                                   const Vocabulary& vocab) {
    NoGradGuard ng;
    ForwardResult r = forward_scene(m, scene, command);

    AttentionDump dump;
    const size_t n = scene.regions.size();
    const size_t layers = r.stack.layers();
    dump.layer_weights.resize(n);
    for (size_t i = 0; i < n; ++i) {
        dump.layer_weights[i].resize(layers);
        for (size_t l = 0; l < layers; ++l) dump.layer_weights[i][l] = r.layer_attn.at(i, l);
    }
    for (const Tensor& map : r.cm.attention_maps) {
        std::vector<std::vector<double>> rows(map.rows());
        for (size_t i = 0; i < map.rows(); ++i) {
            rows[i].resize(map.cols());
            for (size_t j = 0; j < map.cols(); ++j) rows[i][j] = map.at(i, j);
        }
        dump.cross_modal.push_back(std::move(rows));
    }
    for (size_t i = 0; i < n; ++i) dump.region_labels.push_back("region" + std::to_string(i));
    dump.key_labels.push_back(std::string("emotion:") + emotion_label(command.emotion));
    for (int id : command.tokens) {
        dump.token_labels.push_back(vocab.token(id));
        dump.key_labels.push_back(vocab.token(id));
    }

    // Two-group per-layer summary: regions overlapping the ground truth vs
    // fully disjoint ones.
    dump.group_mean.assign(2, std::vector<double>(layers, 0.0));
    dump.group_counts.assign(2, 0);
    for (size_t i = 0; i < n; ++i) {
        const size_t g = iou(scene.regions[i].box, scene.gt_box) > 0.0 ? 0 : 1;
        dump.group_counts[g] += 1;
        for (size_t l = 0; l < layers; ++l) dump.group_mean[g][l] += dump.layer_weights[i][l];
    }
    for (size_t g = 0; g < 2; ++g) {
        if (dump.group_counts[g] == 0) continue;
        for (double& v : dump.group_mean[g]) v /= static_cast<double>(dump.group_counts[g]);
    }
    return dump;
}

std::string AttentionDump::to_json() const {
    nlohmann::json j;
    j["layer_attention"] = layer_weights;
    j["cross_modal"] = cross_modal;
    j["labels"] = {{"regions", region_labels}, {"keys", key_labels}, {"tokens", token_labels}};
    nlohmann::json groups = nlohmann::json::array();
    static const char* names[] = {"iou_gt_0", "iou_eq_0"};
    for (size_t g = 0; g < 2; ++g)
        groups.push_back({{"group", names[g]},
                          {"count", group_counts.empty() ? 0 : group_counts[g]},
                          {"mean_per_layer", group_mean.empty() ? std::vector<double>() : group_mean[g]}});
    j["group_summary"] = groups;
    return j.dump(2) + "\n";
}

std::string AttentionDump::plot_table() const {
    std::ostringstream os;
    os << "layer_index\tgroup\tmean_weight\n";
    static const char* names[] = {"iou_gt_0", "iou_eq_0"};
    const size_t layers = group_mean.empty() ? 0 : group_mean[0].size();
    for (size_t g = 0; g < 2; ++g)
        for (size_t l = 0; l < layers; ++l)
            os << l << "\t" << names[g] << "\t"
               << (group_counts[g] ? format_double(group_mean[g][l]) : "nan") << "\n";
    return os.str();
}

}  // namespace vground
