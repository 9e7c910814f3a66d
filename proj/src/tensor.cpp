#include "vground/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "vground/error.hpp"

namespace vground {

namespace {

thread_local bool g_grad_enabled = true;

std::string shape_str(const std::vector<size_t>& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ")";
    return os.str();
}

void ensure_grad_buffer(TensorNode* n) {
    if (n->grad.empty()) n->grad.assign(n->numel(), 0.0);
}

std::shared_ptr<TensorNode> make_node(std::vector<size_t> shape) {
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->value.assign(n->numel(), 0.0);
    return n;
}

// Wire the result into the tape when any parent is tracked.
void attach(const std::shared_ptr<TensorNode>& out,
            std::vector<std::shared_ptr<TensorNode>> parents,
            std::function<void()> fn) {
    if (!g_grad_enabled) return;
    bool track = false;
    for (const auto& p : parents)
        if (p->requires_grad) track = true;
    if (!track) return;
    out->requires_grad = true;
    out->parents = std::move(parents);
    out->backward = std::move(fn);
}

size_t rows_of(const Tensor& t) { return t.ndim() == 1 ? 1 : t.shape()[0]; }
size_t cols_of(const Tensor& t) { return t.ndim() == 1 ? t.shape()[0] : t.shape()[1]; }

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> data) {
    n_ = std::make_shared<TensorNode>();
    n_->shape = std::move(shape);
    n_->value = std::move(data);
    if (n_->numel() != n_->value.size())
        throw ValidationError("tensor shape " + shape_str(n_->shape) + " does not match data length " +
                              std::to_string(n_->value.size()));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros(std::vector<size_t> shape) { return Tensor(make_node(std::move(shape))); }

Tensor Tensor::full(std::vector<size_t> shape, double v) {
    auto n = make_node(std::move(shape));
    std::fill(n->value.begin(), n->value.end(), v);
    return Tensor(n);
}

Tensor Tensor::uniform(std::vector<size_t> shape, Rng& rng, double lo, double hi) {
    auto n = make_node(std::move(shape));
    for (auto& v : n->value) v = rng.uniform(lo, hi);
    return Tensor(n);
}

size_t Tensor::rows() const { return rows_of(*this); }
size_t Tensor::cols() const { return cols_of(*this); }

double Tensor::item() const {
    if (numel() != 1) throw ValidationError("item() on non-scalar tensor " + shape_str(shape()));
    return n_->value[0];
}

Tensor& Tensor::set_requires_grad(bool v) {
    n_->requires_grad = v;
    return *this;
}

const std::vector<double>& Tensor::grad() const {
    ensure_grad_buffer(n_.get());
    return n_->grad;
}

void Tensor::zero_grad() { n_->grad.assign(n_->numel(), 0.0); }

Tensor Tensor::detach() const {
    auto n = std::make_shared<TensorNode>();
    n->shape = n_->shape;
    n->value = n_->value;
    return Tensor(n);
}

void ensure_finite(const std::vector<double>& v, const std::string& what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError("non-finite value in " + what);
}

void backward(const Tensor& loss) {
    if (loss.numel() != 1)
        throw ValidationError("backward() requires a scalar loss, got " + shape_str(loss.shape()));
    TensorNode* root = loss.node().get();
    if (!root->requires_grad) return;

    // Iterative post-order DFS: the order lists every node after its parents.
    std::vector<TensorNode*> topo;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            TensorNode* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    ensure_grad_buffer(root);
    root->grad[0] += 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        if ((*it)->backward) (*it)->backward();
    }
}

// ---------------------------------------------------------------------------
// elementwise ops
// ---------------------------------------------------------------------------

static void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ValidationError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                              shape_str(b.shape()));
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto out = make_node(a.shape());
    const auto& av = a.data();
    const auto& bv = b.data();
    for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] + bv[i];
    TensorNode* o = out.get();
    auto na = a.node(), nb = b.node();
    attach(out, {na, nb}, [o, na, nb] {
        if (na->requires_grad) {
            ensure_grad_buffer(na.get());
            for (size_t i = 0; i < o->grad.size(); ++i) na->grad[i] += o->grad[i];
        }
        if (nb->requires_grad) {
            ensure_grad_buffer(nb.get());
            for (size_t i = 0; i < o->grad.size(); ++i) nb->grad[i] += o->grad[i];
        }
    });
    return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto out = make_node(a.shape());
    const auto& av = a.data();
    const auto& bv = b.data();
    for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * bv[i];
    TensorNode* o = out.get();
    auto na = a.node(), nb = b.node();
    attach(out, {na, nb}, [o, na, nb] {
        if (na->requires_grad) {
            ensure_grad_buffer(na.get());
            for (size_t i = 0; i < o->grad.size(); ++i) na->grad[i] += o->grad[i] * nb->value[i];
        }
        if (nb->requires_grad) {
            ensure_grad_buffer(nb.get());
            for (size_t i = 0; i < o->grad.size(); ++i) nb->grad[i] += o->grad[i] * na->value[i];
        }
    });
    return Tensor(out);
}

Tensor scale(const Tensor& a, double s) {
    auto out = make_node(a.shape());
    const auto& av = a.data();
    for (size_t i = 0; i < av.size(); ++i) out->value[i] = av[i] * s;
    TensorNode* o = out.get();
    auto na = a.node();
    attach(out, {na}, [o, na, s] {
        ensure_grad_buffer(na.get());
        for (size_t i = 0; i < o->grad.size(); ++i) na->grad[i] += o->grad[i] * s;
    });
    return Tensor(out);
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2)
        throw ValidationError("matmul: expects 2-d operands, got " + shape_str(a.shape()) + " and " +
                              shape_str(b.shape()));
    const size_t m = a.shape()[0], k = a.shape()[1];
    const size_t k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw ValidationError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                              shape_str(b.shape()));
    auto out = make_node({m, n});
    const double* A = a.data().data();
    const double* B = b.data().data();
    double* C = out->value.data();
    for (size_t i = 0; i < m; ++i) {
        const double* Ai = A + i * k;
        double* Ci = C + i * n;
        for (size_t p = 0; p < k; ++p) {
            const double aip = Ai[p];
            if (aip == 0.0) continue;
            const double* Bp = B + p * n;
            for (size_t j = 0; j < n; ++j) Ci[j] += aip * Bp[j];
        }
    }
    ensure_finite(out->value, "matmul output");
    TensorNode* o = out.get();
    auto na = a.node(), nb = b.node();
    attach(out, {na, nb}, [o, na, nb, m, k, n] {
        const double* G = o->grad.data();
        if (na->requires_grad) {
            ensure_grad_buffer(na.get());
            // dA = G * B^T
            const double* B = nb->value.data();
            double* dA = na->grad.data();
            for (size_t i = 0; i < m; ++i)
                for (size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    const double* Gi = G + i * n;
                    const double* Bp = B + p * n;
                    for (size_t j = 0; j < n; ++j) acc += Gi[j] * Bp[j];
                    dA[i * k + p] += acc;
                }
        }
        if (nb->requires_grad) {
            ensure_grad_buffer(nb.get());
            // dB = A^T * G
            const double* A = na->value.data();
            double* dB = nb->grad.data();
            for (size_t p = 0; p < k; ++p)
                for (size_t i = 0; i < m; ++i) {
                    const double aip = A[i * k + p];
                    if (aip == 0.0) continue;
                    const double* Gi = G + i * n;
                    double* dBp = dB + p * n;
                    for (size_t j = 0; j < n; ++j) dBp[j] += aip * Gi[j];
                }
        }
    });
    return Tensor(out);
}

Tensor transpose(const Tensor& a) {
    if (a.ndim() != 2) throw ValidationError("transpose: expects 2-d tensor");
    const size_t r = a.shape()[0], c = a.shape()[1];
    auto out = make_node({c, r});
    const auto& av = a.data();
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out->value[j * r + i] = av[i * c + j];
    TensorNode* o = out.get();
    auto na = a.node();
    attach(out, {na}, [o, na, r, c] {
        ensure_grad_buffer(na.get());
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < c; ++j) na->grad[i * c + j] += o->grad[j * r + i];
    });
    return Tensor(out);
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
    const size_t r = rows_of(x), c = cols_of(x);
    if (v.numel() != c)
        throw ValidationError("add_rowvec: vector length " + std::to_string(v.numel()) +
                              " does not match columns " + std::to_string(c));
    auto out = make_node(x.shape());
    const auto& xv = x.data();
    const auto& vv = v.data();
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out->value[i * c + j] = xv[i * c + j] + vv[j];
    TensorNode* o = out.get();
    auto nx = x.node(), nv = v.node();
    attach(out, {nx, nv}, [o, nx, nv, r, c] {
        if (nx->requires_grad) {
            ensure_grad_buffer(nx.get());
            for (size_t i = 0; i < o->grad.size(); ++i) nx->grad[i] += o->grad[i];
        }
        if (nv->requires_grad) {
            ensure_grad_buffer(nv.get());
            for (size_t i = 0; i < r; ++i)
                for (size_t j = 0; j < c; ++j) nv->grad[j] += o->grad[i * c + j];
        }
    });
    return Tensor(out);
}

Tensor mul_colvec(const Tensor& x, const Tensor& v) {
    const size_t r = rows_of(x), c = cols_of(x);
    if (v.numel() != r)
        throw ValidationError("mul_colvec: vector length " + std::to_string(v.numel()) +
                              " does not match rows " + std::to_string(r));
    auto out = make_node(x.shape());
    const auto& xv = x.data();
    const auto& vv = v.data();
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out->value[i * c + j] = xv[i * c + j] * vv[i];
    TensorNode* o = out.get();
    auto nx = x.node(), nv = v.node();
    attach(out, {nx, nv}, [o, nx, nv, r, c] {
        if (nx->requires_grad) {
            ensure_grad_buffer(nx.get());
            for (size_t i = 0; i < r; ++i)
                for (size_t j = 0; j < c; ++j) nx->grad[i * c + j] += o->grad[i * c + j] * nv->value[i];
        }
        if (nv->requires_grad) {
            ensure_grad_buffer(nv.get());
            for (size_t i = 0; i < r; ++i) {
                double acc = 0.0;
                for (size_t j = 0; j < c; ++j) acc += o->grad[i * c + j] * nx->value[i * c + j];
                nv->grad[i] += acc;
            }
        }
    });
    return Tensor(out);
}

Tensor tile_row(const Tensor& row, size_t n) {
    const size_t c = row.numel();
    if (rows_of(row) != 1) throw ValidationError("tile_row: expects a single row");
    auto out = make_node({n, c});
    const auto& rv = row.data();
    for (size_t i = 0; i < n; ++i)
        std::copy(rv.begin(), rv.end(), out->value.begin() + static_cast<long>(i * c));
    TensorNode* o = out.get();
    auto nr = row.node();
    attach(out, {nr}, [o, nr, n, c] {
        ensure_grad_buffer(nr.get());
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < c; ++j) nr->grad[j] += o->grad[i * c + j];
    });
    return Tensor(out);
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    const size_t ca = cols_of(a), cb = cols_of(b);
    if (ca != cb)
        throw ValidationError("concat_rows: column mismatch " + std::to_string(ca) + " vs " +
                              std::to_string(cb));
    const size_t ra = rows_of(a), rb = rows_of(b);
    auto out = make_node({ra + rb, ca});
    std::copy(a.data().begin(), a.data().end(), out->value.begin());
    std::copy(b.data().begin(), b.data().end(), out->value.begin() + static_cast<long>(ra * ca));
    TensorNode* o = out.get();
    auto na = a.node(), nb = b.node();
    attach(out, {na, nb}, [o, na, nb, ra, ca, rb] {
        if (na->requires_grad) {
            ensure_grad_buffer(na.get());
            for (size_t i = 0; i < ra * ca; ++i) na->grad[i] += o->grad[i];
        }
        if (nb->requires_grad) {
            ensure_grad_buffer(nb.get());
            for (size_t i = 0; i < rb * ca; ++i) nb->grad[i] += o->grad[ra * ca + i];
        }
    });
    return Tensor(out);
}

Tensor hstack(const std::vector<Tensor>& cols) {
    if (cols.empty()) throw ValidationError("hstack: empty input");
    const size_t r = rows_of(cols[0]);
    size_t total = 0;
    for (const auto& t : cols) {
        if (rows_of(t) != r) throw ValidationError("hstack: row mismatch");
        total += cols_of(t);
    }
    auto out = make_node({r, total});
    size_t off = 0;
    for (const auto& t : cols) {
        const size_t c = cols_of(t);
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < c; ++j) out->value[i * total + off + j] = t.data()[i * c + j];
        off += c;
    }
    TensorNode* o = out.get();
    std::vector<std::shared_ptr<TensorNode>> parents;
    parents.reserve(cols.size());
    for (const auto& t : cols) parents.push_back(t.node());
    auto ps = parents;
    attach(out, std::move(parents), [o, ps, r, total] {
        size_t off = 0;
        for (const auto& p : ps) {
            const size_t c = p->numel() / (r ? r : 1);
            if (p->requires_grad) {
                ensure_grad_buffer(p.get());
                for (size_t i = 0; i < r; ++i)
                    for (size_t j = 0; j < c; ++j) p->grad[i * c + j] += o->grad[i * total + off + j];
            }
            off += c;
        }
    });
    return Tensor(out);
}

Tensor slice_cols(const Tensor& x, size_t c0, size_t c1) {
    const size_t r = rows_of(x), c = cols_of(x);
    if (c0 >= c1 || c1 > c) throw ValidationError("slice_cols: bad range");
    const size_t w = c1 - c0;
    auto out = make_node({r, w});
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < w; ++j) out->value[i * w + j] = x.data()[i * c + c0 + j];
    TensorNode* o = out.get();
    auto nx = x.node();
    attach(out, {nx}, [o, nx, r, c, c0, w] {
        ensure_grad_buffer(nx.get());
        for (size_t i = 0; i < r; ++i)
            for (size_t j = 0; j < w; ++j) nx->grad[i * c + c0 + j] += o->grad[i * w + j];
    });
    return Tensor(out);
}

Tensor slice_rows(const Tensor& x, size_t r0, size_t r1) {
    const size_t r = rows_of(x), c = cols_of(x);
    if (r0 >= r1 || r1 > r) throw ValidationError("slice_rows: bad range");
    const size_t h = r1 - r0;
    auto out = make_node({h, c});
    std::copy(x.data().begin() + static_cast<long>(r0 * c), x.data().begin() + static_cast<long>(r1 * c),
              out->value.begin());
    TensorNode* o = out.get();
    auto nx = x.node();
    attach(out, {nx}, [o, nx, r0, c, h] {
        ensure_grad_buffer(nx.get());
        for (size_t i = 0; i < h * c; ++i) nx->grad[r0 * c + i] += o->grad[i];
    });
    return Tensor(out);
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
    const size_t r = rows_of(table), c = cols_of(table);
    for (int id : ids)
        if (id < 0 || static_cast<size_t>(id) >= r)
            throw ValidationError("gather_rows: id " + std::to_string(id) + " outside table rows " +
                                  std::to_string(r));
    auto out = make_node({ids.size(), c});
    for (size_t i = 0; i < ids.size(); ++i)
        std::copy(table.data().begin() + static_cast<long>(ids[i] * c),
                  table.data().begin() + static_cast<long>((ids[i] + 1) * c),
                  out->value.begin() + static_cast<long>(i * c));
    TensorNode* o = out.get();
    auto nt = table.node();
    attach(out, {nt}, [o, nt, ids, c] {
        ensure_grad_buffer(nt.get());
        for (size_t i = 0; i < ids.size(); ++i)
            for (size_t j = 0; j < c; ++j)
                nt->grad[static_cast<size_t>(ids[i]) * c + j] += o->grad[i * c + j];
    });
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// normalization / activations
// ---------------------------------------------------------------------------

Tensor softmax_rows(const Tensor& x, const std::vector<uint8_t>* mask) {
    const size_t r = rows_of(x), c = cols_of(x);
    if (c == 0) throw ValidationError("softmax: empty axis slice");
    if (mask && mask->size() != c) throw ValidationError("softmax: mask length mismatch");
    if (mask) {
        bool any = false;
        for (uint8_t m : *mask) any = any || m;
        if (!any) throw ValidationError("softmax: all columns masked");
    }
    auto out = make_node(x.shape());
    const auto& xv = x.data();
    for (size_t i = 0; i < r; ++i) {
        double mx = -HUGE_VAL;
        for (size_t j = 0; j < c; ++j)
            if (!mask || (*mask)[j]) mx = std::max(mx, xv[i * c + j]);
        double denom = 0.0;
        for (size_t j = 0; j < c; ++j) {
            if (!mask || (*mask)[j]) {
                double e = std::exp(xv[i * c + j] - mx);
                out->value[i * c + j] = e;
                denom += e;
            } else {
                out->value[i * c + j] = 0.0;
            }
        }
        for (size_t j = 0; j < c; ++j) out->value[i * c + j] /= denom;
    }
    ensure_finite(out->value, "softmax output");
    TensorNode* o = out.get();
    auto nx = x.node();
    attach(out, {nx}, [o, nx, r, c] {
        ensure_grad_buffer(nx.get());
        for (size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (size_t j = 0; j < c; ++j) dot += o->grad[i * c + j] * o->value[i * c + j];
            for (size_t j = 0; j < c; ++j) {
                const double y = o->value[i * c + j];
                nx->grad[i * c + j] += y * (o->grad[i * c + j] - dot);
            }
        }
    });
    return Tensor(out);
}

Tensor softmax(const Tensor& x, int axis) {
    if (x.ndim() == 1) {
        if (axis != 0) throw ValidationError("softmax: axis out of range for 1-d tensor");
        return softmax_rows(x);
    }
    if (axis == 1) return softmax_rows(x);
    if (axis == 0) return transpose(softmax_rows(transpose(x)));
    throw ValidationError("softmax: axis out of range");
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    if (eps <= 0.0) throw ValidationError("layer_norm: eps must be positive");
    const size_t r = rows_of(x), c = cols_of(x);
    if (gamma.numel() != c || beta.numel() != c)
        throw ValidationError("layer_norm: gamma/beta length must match normalized dimension");
    auto out = make_node(x.shape());
    // Cache the normalized values and inverse stddev for backward.
    auto norm = std::make_shared<std::vector<double>>(r * c);
    auto inv_std = std::make_shared<std::vector<double>>(r);
    const auto& xv = x.data();
    const auto& gv = gamma.data();
    const auto& bv = beta.data();
    for (size_t i = 0; i < r; ++i) {
        double mean = 0.0;
        for (size_t j = 0; j < c; ++j) mean += xv[i * c + j];
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (size_t j = 0; j < c; ++j) {
            const double d = xv[i * c + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (size_t j = 0; j < c; ++j) {
            const double y = (xv[i * c + j] - mean) * is;
            (*norm)[i * c + j] = y;
            out->value[i * c + j] = y * gv[j] + bv[j];
        }
    }
    ensure_finite(out->value, "layer_norm output");
    TensorNode* o = out.get();
    auto nx = x.node(), ng = gamma.node(), nb = beta.node();
    attach(out, {nx, ng, nb}, [o, nx, ng, nb, norm, inv_std, r, c] {
        for (size_t i = 0; i < r; ++i) {
            if (ng->requires_grad) {
                ensure_grad_buffer(ng.get());
                for (size_t j = 0; j < c; ++j)
                    ng->grad[j] += o->grad[i * c + j] * (*norm)[i * c + j];
            }
            if (nb->requires_grad) {
                ensure_grad_buffer(nb.get());
                for (size_t j = 0; j < c; ++j) nb->grad[j] += o->grad[i * c + j];
            }
            if (nx->requires_grad) {
                ensure_grad_buffer(nx.get());
                double mean_g = 0.0, mean_gy = 0.0;
                for (size_t j = 0; j < c; ++j) {
                    const double gj = o->grad[i * c + j] * ng->value[j];
                    mean_g += gj;
                    mean_gy += gj * (*norm)[i * c + j];
                }
                mean_g /= static_cast<double>(c);
                mean_gy /= static_cast<double>(c);
                for (size_t j = 0; j < c; ++j) {
                    const double gj = o->grad[i * c + j] * ng->value[j];
                    nx->grad[i * c + j] +=
                        (gj - mean_g - (*norm)[i * c + j] * mean_gy) * (*inv_std)[i];
                }
            }
        }
    });
    return Tensor(out);
}

Tensor tanh(const Tensor& x) {
    auto out = make_node(x.shape());
    const auto& xv = x.data();
    for (size_t i = 0; i < xv.size(); ++i) out->value[i] = std::tanh(xv[i]);
    TensorNode* o = out.get();
    auto nx = x.node();
    attach(out, {nx}, [o, nx] {
        ensure_grad_buffer(nx.get());
        for (size_t i = 0; i < o->grad.size(); ++i)
            nx->grad[i] += o->grad[i] * (1.0 - o->value[i] * o->value[i]);
    });
    return Tensor(out);
}

Tensor sigmoid(const Tensor& x) {
    auto out = make_node(x.shape());
    const auto& xv = x.data();
    for (size_t i = 0; i < xv.size(); ++i) out->value[i] = 1.0 / (1.0 + std::exp(-xv[i]));
    TensorNode* o = out.get();
    auto nx = x.node();
    attach(out, {nx}, [o, nx] {
        ensure_grad_buffer(nx.get());
        for (size_t i = 0; i < o->grad.size(); ++i)
            nx->grad[i] += o->grad[i] * o->value[i] * (1.0 - o->value[i]);
    });
    return Tensor(out);
}

Tensor gelu(const Tensor& x) {
    auto out = make_node(x.shape());
    const auto& xv = x.data();
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    for (size_t i = 0; i < xv.size(); ++i)
        out->value[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] * inv_sqrt2));
    TensorNode* o = out.get();
    auto nx = x.node();
    attach(out, {nx}, [o, nx] {
        ensure_grad_buffer(nx.get());
        constexpr double inv_sqrt2 = 0.7071067811865475244;
        constexpr double inv_sqrt2pi = 0.3989422804014326779;
        for (size_t i = 0; i < o->grad.size(); ++i) {
            const double v = nx->value[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
            nx->grad[i] += o->grad[i] * (cdf + v * pdf);
        }
    });
    return Tensor(out);
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    auto out = make_node(x.shape());
    const auto& xv = x.data();
    for (size_t i = 0; i < xv.size(); ++i) out->value[i] = std::min(hi, std::max(lo, xv[i]));
    TensorNode* o = out.get();
    auto nx = x.node();
    attach(out, {nx}, [o, nx, lo, hi] {
        ensure_grad_buffer(nx.get());
        for (size_t i = 0; i < o->grad.size(); ++i) {
            const double v = nx->value[i];
            if (v >= lo && v <= hi) nx->grad[i] += o->grad[i];
        }
    });
    return Tensor(out);
}

// ---------------------------------------------------------------------------
// reductions / losses
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& x) {
    auto out = make_node({1});
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    out->value[0] = acc;
    TensorNode* o = out.get();
    auto nx = x.node();
    attach(out, {nx}, [o, nx] {
        ensure_grad_buffer(nx.get());
        for (auto& g : nx->grad) g += o->grad[0];
    });
    return Tensor(out);
}

Tensor mean_all(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor mean_rows(const Tensor& x, const std::vector<uint8_t>* mask) {
    const size_t r = rows_of(x), c = cols_of(x);
    if (mask && mask->size() != r) throw ValidationError("mean_rows: mask length mismatch");
    size_t count = 0;
    if (mask) {
        for (uint8_t m : *mask) count += m ? 1 : 0;
    } else {
        count = r;
    }
    if (count == 0) throw ValidationError("mean_rows: no valid rows");
    auto out = make_node({1, c});
    const auto& xv = x.data();
    for (size_t i = 0; i < r; ++i) {
        if (mask && !(*mask)[i]) continue;
        for (size_t j = 0; j < c; ++j) out->value[j] += xv[i * c + j];
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (size_t j = 0; j < c; ++j) out->value[j] *= inv;
    TensorNode* o = out.get();
    auto nx = x.node();
    std::vector<uint8_t> mk = mask ? *mask : std::vector<uint8_t>();
    attach(out, {nx}, [o, nx, r, c, inv, mk] {
        ensure_grad_buffer(nx.get());
        for (size_t i = 0; i < r; ++i) {
            if (!mk.empty() && !mk[i]) continue;
            for (size_t j = 0; j < c; ++j) nx->grad[i * c + j] += o->grad[j] * inv;
        }
    });
    return Tensor(out);
}

Tensor bce_loss(const Tensor& probabilities, const Tensor& targets, double clamp_eps) {
    check_same_shape(probabilities, targets, "bce_loss");
    for (size_t i = 0; i < targets.numel(); ++i) {
        const double t = targets.data()[i];
        if (t != 0.0 && t != 1.0)
            throw ValidationError("bce_loss: target at index " + std::to_string(i) +
                                  " is not in {0,1}: " + std::to_string(t));
    }
    const size_t n = probabilities.numel();
    const double lo = clamp_eps, hi = 1.0 - clamp_eps;
    auto out = make_node({1});
    const auto& pv = probabilities.data();
    const auto& tv = targets.data();
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double p = std::min(hi, std::max(lo, pv[i]));
        acc += -(tv[i] * std::log(p) + (1.0 - tv[i]) * std::log(1.0 - p));
    }
    out->value[0] = acc / static_cast<double>(n);
    ensure_finite(out->value, "bce_loss output");
    TensorNode* o = out.get();
    auto np = probabilities.node(), nt = targets.node();
    attach(out, {np, nt}, [o, np, nt, n, lo, hi] {
        if (!np->requires_grad) return;
        ensure_grad_buffer(np.get());
        const double g = o->grad[0] / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            const double raw = np->value[i];
            if (raw < lo || raw > hi) continue;  // clamp region: zero gradient
            const double t = nt->value[i];
            np->grad[i] += g * (-t / raw + (1.0 - t) / (1.0 - raw));
        }
    });
    return Tensor(out);
}

}  // namespace vground
