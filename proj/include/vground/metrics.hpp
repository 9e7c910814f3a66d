#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vground/data.hpp"

namespace vground {

struct ModelState;
struct Command;

// Intersection-over-union of two axis-aligned boxes on continuous
// coordinates. Degenerate boxes are a validation error.
double iou(const Box& a, const Box& b);

// Fraction of pairs with iou strictly above 0.5.
double ap50(const std::vector<std::pair<Box, Box>>& predicted_vs_gt);

struct RunMeta {
    std::string checkpoint_digest;
    std::string dataset_digest;
    double wall_clock_ms = 0;
};

struct MetricsReport {
    double overall_ap50 = 0;
    double mean_iou = 0;
    size_t count = 0;
    // Cells for subsets absent from the evaluated data are simply missing.
    std::map<SubsetTag, double> per_subset_ap50;
    std::map<SubsetTag, size_t> per_subset_count;
    RunMeta meta;

    // wall-clock is excluded when comparing reports for determinism.
    std::string to_json(bool include_wall_clock = true) const;
    std::string table() const;  // per-subset table, Table-style column names
};

// Runs predict over the chosen split (Split::None = every scene), optionally
// restricted to one subset tag. Scenes run data-parallel over threads with a
// read-only model; the reduction order is fixed, so the report is
// deterministic. threads = 0 picks the hardware count.
MetricsReport evaluate(const ModelState& m, const Dataset& ds, Split split = Split::None,
                       std::optional<SubsetTag> subset_filter = std::nullopt, size_t threads = 0);

struct AttentionDump {
    // Layer-attention weights, one row per region over the m+1 layers.
    std::vector<std::vector<double>> layer_weights;
    // Per-head cross-modal maps (query rows x key rows).
    std::vector<std::vector<std::vector<double>>> cross_modal;
    std::vector<std::string> region_labels;  // query rows
    std::vector<std::string> key_labels;     // emotion slot + command tokens
    std::vector<std::string> token_labels;
    // Mean layer-attention weight per layer for regions grouped by IoU with the ground
    // truth: group 0 has IoU > 0, group 1 has IoU = 0. Missing groups keep an
    // empty row.
    std::vector<std::vector<double>> group_mean;  // 2 x (m+1)
    std::vector<size_t> group_counts;             // size 2

    std::string to_json() const;
    // Flat (layer_index, group, mean_weight) table, 2*(m+1) rows.
    std::string plot_table() const;
};

AttentionDump dump_layer_attention(const ModelState& m, const Scene& scene, const Command& command,
                                   const Vocabulary& vocab);

}  // namespace vground
