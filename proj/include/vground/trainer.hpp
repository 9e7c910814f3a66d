#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vground/config.hpp"
#include "vground/data.hpp"
#include "vground/metrics.hpp"
#include "vground/model.hpp"

namespace vground {

// Per-region binary labels: 1 where iou(region, gt) >= 0.5; when nothing
// clears the threshold the max-IoU region (ties -> lowest index) gets the 1.
std::vector<double> make_targets(const Scene& scene);

struct TrainOutcome {
    ModelState final_model;
    ModelState best_model;       // best val ap50 checkpoint; final when no val split
    double best_val_ap50 = -1;   // -1 when no val split
    double final_train_ap50 = -1;
    size_t steps = 0;
    std::string log_text;        // line-delimited JSON records
    std::vector<size_t> train_indices;  // after fraction subsampling
};

// Seeded shuffling per epoch, per-batch BCE on per-region sigmoid logits,
// AdamW with cosine-annealing warm restarts, gradient clipping, padded token
// batches. Deterministic given (config, dataset).
TrainOutcome train(const Config& cfg, const Dataset& ds, const Vocabulary& vocab);

struct ReducedDataRun {
    double fraction = 0;
    size_t train_size = 0;
    std::optional<MetricsReport> report;  // absent when the run failed
    std::string error;
};

struct ReducedDataSuite {
    std::vector<ReducedDataRun> runs;  // fractions 0.5, 0.75, 1.0
    std::string test_digest;           // shared across all three runs
};

// Trains three models differing only in training fraction and evaluates each
// on the identical test split. Per-run failures are recorded, not fatal.
ReducedDataSuite run_reduced_data_suite(const Config& cfg, const Dataset& ds, const Vocabulary& vocab);

// ap50 of argmax predictions over the given sample indices.
double ap50_over(const ModelState& m, const Dataset& ds, const std::vector<size_t>& indices,
                 size_t threads = 0);

}  // namespace vground
