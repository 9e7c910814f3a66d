#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vground/rng.hpp"

namespace vground {

// One recorded node of the computation tape. Intermediate nodes own their
// backward rule as a closure over the parent nodes; backward() replays them in
// reverse topological order.
struct TensorNode {
    std::vector<size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // lazily sized; empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void()> backward;

    size_t numel() const {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        return n;
    }
};

// Thread-local autograd switch. Evaluation paths disable taping so read-only
// forward passes build no graph.
bool grad_enabled();
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Dense row-major double tensor with value semantics over a shared node.
// Supported ranks are 1 and 2 (scalars are shape {1}).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorNode> n) : n_(std::move(n)) {}
    Tensor(std::vector<size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, double v);
    static Tensor uniform(std::vector<size_t> shape, Rng& rng, double lo, double hi);

    bool defined() const { return n_ != nullptr; }
    const std::vector<size_t>& shape() const { return n_->shape; }
    size_t ndim() const { return n_->shape.size(); }
    size_t numel() const { return n_->numel(); }
    size_t rows() const;
    size_t cols() const;

    std::vector<double>& data() { return n_->value; }
    const std::vector<double>& data() const { return n_->value; }
    double item() const;
    double at(size_t i) const { return n_->value[i]; }
    double at(size_t r, size_t c) const { return n_->value[r * cols() + c]; }

    bool requires_grad() const { return n_->requires_grad; }
    Tensor& set_requires_grad(bool v);
    const std::vector<double>& grad() const;
    bool has_grad() const { return !n_->grad.empty(); }
    void zero_grad();

    // Independent copy of the values, detached from the tape.
    Tensor detach() const;

    std::shared_ptr<TensorNode>& node() { return n_; }
    const std::shared_ptr<TensorNode>& node() const { return n_; }

private:
    std::shared_ptr<TensorNode> n_;
};

// Reverse-mode sweep from a scalar loss. Populates grads of every
// requires_grad leaf reachable through the tape; fan-out accumulates.
void backward(const Tensor& loss);

// ---- primitive operations (all differentiable unless noted) ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor neg(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// X (r x c) + v broadcast over rows; v is shape {c} or {1, c}.
Tensor add_rowvec(const Tensor& x, const Tensor& v);
// X (r x c) with row i scaled by v[i]; v is shape {r} or {r, 1}.
Tensor mul_colvec(const Tensor& x, const Tensor& v);
// Repeat a single row n times.
Tensor tile_row(const Tensor& row, size_t n);

Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor hstack(const std::vector<Tensor>& cols);
Tensor slice_cols(const Tensor& x, size_t c0, size_t c1);
Tensor slice_rows(const Tensor& x, size_t r0, size_t r1);
// Row lookup by index (embedding gather); scatter-add on backward.
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);

// Row-wise softmax, numerically stabilized by max subtraction. An optional
// column mask (1 = valid) removes keys entirely: masked outputs are exactly 0
// and each row renormalizes over the valid columns.
Tensor softmax_rows(const Tensor& x, const std::vector<uint8_t>* mask = nullptr);
// axis 1 = along rows (each row sums to 1), axis 0 = along columns.
Tensor softmax(const Tensor& x, int axis);

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

Tensor sum(const Tensor& x);
Tensor mean_all(const Tensor& x);
// Mean over rows (optionally only rows with mask = 1) -> shape {1, cols}.
Tensor mean_rows(const Tensor& x, const std::vector<uint8_t>* mask = nullptr);

// Mean of -[t ln p + (1-t) ln(1-p)] with p clamped to [eps, 1-eps].
Tensor bce_loss(const Tensor& probabilities, const Tensor& targets, double clamp_eps = 1e-7);

// Throws NumericError naming `what` if any value is non-finite.
void ensure_finite(const std::vector<double>& v, const std::string& what);

}  // namespace vground
