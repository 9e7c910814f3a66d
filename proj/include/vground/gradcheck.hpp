#pragma once

#include <functional>
#include <vector>

#include "vground/rng.hpp"
#include "vground/tensor.hpp"

namespace vground {

// Central finite-difference check of reverse-mode gradients.
// `fn` must be a scalar-valued, smooth function of the given inputs. Returns
// max over checked coordinates of |analytic - central| / max(1, |analytic|).
//
// With max_coords > 0 the check runs on a seeded random subsample of that many
// coordinates across all inputs instead of every coordinate.
double grad_check(const std::function<Tensor(std::vector<Tensor>&)>& fn, std::vector<Tensor>& inputs,
                  double eps = 1e-5, size_t max_coords = 0, uint64_t sample_seed = 0);

}  // namespace vground
