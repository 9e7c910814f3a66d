#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vground/tensor.hpp"

namespace vground {

// Cosine annealing with warm restarts. `step` is the global step counter;
// the cycle length starts at t0 and multiplies by t_mult at each restart.
double lr_schedule(size_t step, size_t t0, size_t t_mult, double lr_min, double lr_max);

struct AdamWOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// AdamW with decoupled multiplicative weight decay. Moments are kept per
// parameter in registration order; one shared step counter.
class AdamW {
public:
    AdamW(std::vector<std::pair<std::string, Tensor>> params, AdamWOptions opts = {});

    // Applies one update from the parameters' accumulated grads.
    void step(double lr);
    void zero_grad();

    size_t step_count() const { return step_count_; }
    const AdamWOptions& options() const { return opts_; }
    const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }

    // Raw state access for checkpointing.
    std::vector<double>& first_moment(size_t i) { return m_[i]; }
    std::vector<double>& second_moment(size_t i) { return v_[i]; }
    void set_step_count(size_t t) { step_count_ = t; }

    // Global-norm gradient clipping over all registered parameters.
    // Returns the pre-clip norm.
    double clip_grad_norm(double max_norm);

private:
    std::vector<std::pair<std::string, Tensor>> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    AdamWOptions opts_;
    size_t step_count_ = 0;
};

}  // namespace vground
