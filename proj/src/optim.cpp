#include "vground/optim.hpp"

#include <cmath>

#include "vground/error.hpp"

namespace vground {

double lr_schedule(size_t step, size_t t0, size_t t_mult, double lr_min, double lr_max) {
    if (t0 < 1) throw ValidationError("lr_schedule: t0 must be >= 1");
    if (t_mult < 1) throw ValidationError("lr_schedule: t_mult must be >= 1");
    if (lr_min > lr_max) throw ValidationError("lr_schedule: lr_min must be <= lr_max");
    size_t t_cur = step;
    size_t t_i = t0;
    while (t_cur >= t_i) {
        t_cur -= t_i;
        t_i *= t_mult;
    }
    if (t_cur == 0) return lr_max;  // exact at every restart
    const double phase = M_PI * static_cast<double>(t_cur) / static_cast<double>(t_i);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(phase));
}

AdamW::AdamW(std::vector<std::pair<std::string, Tensor>> params, AdamWOptions opts)
    : params_(std::move(params)), opts_(opts) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i].second.numel(), 0.0);
        v_[i].assign(params_[i].second.numel(), 0.0);
    }
}

void AdamW::zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
}

double AdamW::clip_grad_norm(double max_norm) {
    double sq = 0.0;
    for (auto& [name, p] : params_) {
        if (!p.has_grad()) continue;
        for (double g : p.node()->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& [name, p] : params_) {
            if (!p.has_grad()) continue;
            for (double& g : p.node()->grad) g *= s;
        }
    }
    return norm;
}

void AdamW::step(double lr) {
    if (lr <= 0.0) throw ValidationError("adamw: lr must be positive");
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(opts_.beta1, t);
    const double bc2 = 1.0 - std::pow(opts_.beta2, t);
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i].second;
        auto& value = p.node()->value;
        const std::vector<double>& g = p.grad();
        for (double gv : g)
            if (!std::isfinite(gv))
                throw NumericError("adamw: non-finite gradient in parameter " + params_[i].first);
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < value.size(); ++j) {
            // decoupled weight decay
            value[j] *= (1.0 - lr * opts_.weight_decay);
            m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g[j];
            v[j] = opts_.beta2 * v[j] + (1.0 - opts_.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            value[j] -= lr * mhat / (std::sqrt(vhat) + opts_.eps);
        }
    }
}

}  // namespace vground
