#include "vground/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "vground/error.hpp"

namespace vground {

double grad_check(const std::function<Tensor(std::vector<Tensor>&)>& fn, std::vector<Tensor>& inputs,
                  double eps, size_t max_coords, uint64_t sample_seed) {
    for (auto& t : inputs) t.set_requires_grad(true);

    // Analytic pass.
    for (auto& t : inputs) t.zero_grad();
    Tensor loss = fn(inputs);
    if (loss.numel() != 1) throw ValidationError("grad_check: fn must be scalar-valued");
    backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto& t : inputs) analytic.push_back(t.grad());

    // Coordinate list, optionally subsampled.
    std::vector<std::pair<size_t, size_t>> coords;
    for (size_t i = 0; i < inputs.size(); ++i)
        for (size_t j = 0; j < inputs[i].numel(); ++j) coords.emplace_back(i, j);
    if (max_coords > 0 && coords.size() > max_coords) {
        Rng rng(sample_seed);
        rng.shuffle(coords);
        coords.resize(max_coords);
    }

    NoGradGuard ng;
    double worst = 0.0;
    for (auto [i, j] : coords) {
        auto& value = inputs[i].node()->value;
        const double saved = value[j];
        value[j] = saved + eps;
        const double up = fn(inputs).item();
        value[j] = saved - eps;
        const double down = fn(inputs).item();
        value[j] = saved;
        const double fd = (up - down) / (2.0 * eps);
        const double a = analytic[i][j];
        const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace vground
