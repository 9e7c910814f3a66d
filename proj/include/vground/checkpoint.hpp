#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vground/config.hpp"
#include "vground/model.hpp"
#include "vground/optim.hpp"

namespace vground {

// Versioned binary container: config snapshot, named parameter tensors as
// row-major doubles, and optionally the optimizer moments. Little-endian on
// every platform.
void save_checkpoint(const std::string& path, const Config& cfg, ModelState& model,
                     AdamW* optimizer = nullptr);

struct LoadedCheckpoint {
    Config config;
    ModelState model;
    bool has_optimizer = false;
    uint64_t step_count = 0;
    // Moments in parameter order, present when has_optimizer.
    std::vector<std::vector<double>> first_moments;
    std::vector<std::vector<double>> second_moments;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace vground
