#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vground/attention.hpp"
#include "vground/gradcheck.hpp"

using namespace vground;
using namespace vground::testing;

namespace {

// Model sized so every cross-modal projection is square and can be pinned to
// the identity: d = d_vision = attn_width = n.
ModelState identity_cross_model(size_t n, size_t heads = 1) {
    ModelConfig cfg = tiny_config(n, n, 1, 1, 1, 1, 4);
    cfg.cross_heads = heads;
    cfg.attn_width = n;
    ModelState m = ModelState::init(cfg, 123);
    return m;
}

void pin_identity(ModelState& m) {
    const size_t n = m.cfg.d;
    m.cross.q_in.w = identity(n);
    m.cross.q_in.b = Tensor::zeros({n});
    m.cross.k_in.w = identity(n);
    m.cross.k_in.b = Tensor::zeros({n});
    for (size_t i = 0; i < m.cross.head_q.size(); ++i) {
        m.cross.head_q[i] = identity(n);
        m.cross.head_k[i] = identity(n);
        m.cross.head_v[i] = identity(n);
    }
    m.cross.residual.w = identity(n);
    m.cross.residual.b = Tensor::zeros({n});
}

EncoderOutputs make_outs(Rng& rng, size_t n_vis, size_t n_text, size_t n_ctx, size_t d,
                         size_t d_vision) {
    EncoderOutputs outs;
    outs.o_vision = random_tensor({n_vis, d_vision}, rng);
    outs.o_text = random_tensor({n_text, d}, rng);
    outs.o_emo = random_tensor({1, d}, rng);
    outs.o_context = random_tensor({n_ctx, d}, rng);
    outs.text_mask.assign(n_text, 1);
    return outs;
}

// The 20-line reference: single-head scaled dot-product attention + residual.
std::vector<double> reference_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                        const Tensor& residual) {
    const size_t rq = q.rows(), rk = k.rows(), d = q.cols();
    std::vector<double> out(rq * d, 0.0);
    for (size_t i = 0; i < rq; ++i) {
        std::vector<double> logits(rk, 0.0);
        double mx = -1e300;
        for (size_t j = 0; j < rk; ++j) {
            for (size_t c = 0; c < d; ++c) logits[j] += q.at(i, c) * k.at(j, c);
            logits[j] /= std::sqrt(static_cast<double>(d));
            mx = std::max(mx, logits[j]);
        }
        double denom = 0.0;
        for (size_t j = 0; j < rk; ++j) denom += std::exp(logits[j] - mx);
        for (size_t j = 0; j < rk; ++j) {
            const double w = std::exp(logits[j] - mx) / denom;
            for (size_t c = 0; c < d; ++c) out[i * d + c] += w * v.at(j, c);
        }
        for (size_t c = 0; c < d; ++c) out[i * d + c] += residual.at(i, c);
    }
    return out;
}

}  // namespace

TEST_CASE("position tokens: purity, shapes, command sensitivity") {
    ModelConfig cfg = tiny_config();
    ModelState m = ModelState::init(cfg, 31);
    Rng rng(8);
    Scene s = random_scene(rng, 5, cfg.patch_grid, cfg.patch_width, cfg.d_vision);
    std::vector<int> tokens = {4, 9, 2};

    PositionTokens a = position_tokens(m, tokens, s);
    PositionTokens b = position_tokens(m, tokens, s);
    CHECK(a.l_q.rows() == 5);
    CHECK(a.l_q.cols() == cfg.d_vision);
    CHECK(a.l_k.rows() == 1 + tokens.size());
    CHECK(a.l_k.cols() == cfg.d);
    for (size_t i = 0; i < a.l_q.numel(); ++i) CHECK(a.l_q.data()[i] == b.l_q.data()[i]);
    for (size_t i = 0; i < a.l_k.numel(); ++i) CHECK(a.l_k.data()[i] == b.l_k.data()[i]);

    PositionTokens c = position_tokens(m, {7, 9, 2}, s);
    bool differs = false;
    for (size_t i = 0; i < a.l_q.numel(); ++i) differs = differs || a.l_q.data()[i] != c.l_q.data()[i];
    CHECK(differs);
}

TEST_CASE("reference equivalence: h=1 identity projections reduce to scaled dot-product") {
    ModelState m = identity_cross_model(4);
    pin_identity(m);
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        EncoderOutputs outs = make_outs(rng, 4, 3, 4, 4, 4);  // context rows == key rows
        PositionTokens toks{random_tensor({4, 4}, rng), random_tensor({4, 4}, rng)};
        CrossModalOutput cm = cross_modal_attention(m, outs, toks);

        Tensor q = add(outs.o_vision, toks.l_q);
        Tensor k = add(concat_rows(outs.o_emo, outs.o_text), toks.l_k);
        const auto expect = reference_attention(q, k, outs.o_context, q);
        REQUIRE(cm.alpha.numel() == expect.size());
        for (size_t i = 0; i < expect.size(); ++i)
            CHECK(std::abs(cm.alpha.data()[i] - expect[i]) < 1e-9);
    }
}

TEST_CASE("zero queries and keys give uniform attention over values") {
    ModelState m = identity_cross_model(4);
    pin_identity(m);
    m.cross.residual.w = Tensor::zeros({4, 4});  // isolate the attention term
    Rng rng(19);
    EncoderOutputs outs = make_outs(rng, 2, 3, 4, 4, 4);
    outs.o_vision = Tensor::zeros({2, 4});
    outs.o_text = Tensor::zeros({3, 4});
    outs.o_emo = Tensor::zeros({1, 4});
    PositionTokens toks{Tensor::zeros({2, 4}), Tensor::zeros({4, 4})};
    CrossModalOutput cm = cross_modal_attention(m, outs, toks);
    for (size_t c = 0; c < 4; ++c) {
        double mean = 0;
        for (size_t j = 0; j < 4; ++j) mean += outs.o_context.at(j, c);
        mean /= 4.0;
        CHECK(cm.alpha.at(0, c) == doctest::Approx(mean));
        CHECK(cm.alpha.at(1, c) == doctest::Approx(mean));
    }
    for (const Tensor& map : cm.attention_maps)
        for (double v : map.data()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("a dominant key logit routes its value row through") {
    ModelState m = identity_cross_model(4);
    pin_identity(m);
    m.cross.residual.w = Tensor::zeros({4, 4});
    Rng rng(23);
    EncoderOutputs outs = make_outs(rng, 1, 3, 4, 4, 4);
    // q = 20*e1; winning key = +e1, losers = -e1 -> logit gap 20 after /sqrt(4)=2 it's 20
    outs.o_vision = Tensor({1, 4}, {40, 0, 0, 0});
    Tensor keys({4, 4}, {1, 0, 0, 0, -1, 0, 0, 0, -1, 0, 0, 0, -1, 0, 0, 0});
    outs.o_emo = slice_rows(keys, 0, 1).detach();
    outs.o_text = slice_rows(keys, 1, 4).detach();
    PositionTokens toks{Tensor::zeros({1, 4}), Tensor::zeros({4, 4})};
    CrossModalOutput cm = cross_modal_attention(m, outs, toks);
    for (size_t c = 0; c < 4; ++c)
        CHECK(std::abs(cm.alpha.at(0, c) - outs.o_context.at(0, c)) < 1e-6);
}

TEST_CASE("identical value rows pass through any attention weights") {
    ModelState m = identity_cross_model(4);
    pin_identity(m);
    m.cross.residual.w = Tensor::zeros({4, 4});
    Rng rng(29);
    EncoderOutputs outs = make_outs(rng, 3, 3, 7, 4, 4);  // context rows != key rows: alignment active
    std::vector<double> row = {0.3, -1.2, 0.5, 2.0};
    std::vector<double> ctx;
    for (int i = 0; i < 7; ++i) ctx.insert(ctx.end(), row.begin(), row.end());
    outs.o_context = Tensor({7, 4}, ctx);
    PositionTokens toks{random_tensor({3, 4}, rng), random_tensor({4, 4}, rng)};
    CrossModalOutput cm = cross_modal_attention(m, outs, toks);
    for (size_t i = 0; i < 3; ++i)
        for (size_t c = 0; c < 4; ++c) CHECK(cm.alpha.at(i, c) == doctest::Approx(row[c]));
}

TEST_CASE("sum-of-heads decomposition against a dense oracle") {
    ModelConfig cfg = tiny_config(8, 8, 1, 1, 1, 1, 4);
    cfg.cross_heads = 4;
    cfg.attn_width = 8;
    ModelState m = ModelState::init(cfg, 57);
    Rng rng(31);
    EncoderOutputs outs = make_outs(rng, 3, 2, 3, 8, 8);  // ctx rows == 1+2 keys: V = context
    PositionTokens toks{random_tensor({3, 8}, rng), random_tensor({3, 8}, rng)};
    CrossModalOutput cm = cross_modal_attention(m, outs, toks);
    REQUIRE(cm.attention_maps.size() == 4);

    // dense oracle: recompute each head from raw weights and sum
    auto matref = [](const Tensor& t, size_t i, size_t j) { return t.at(i, j); };
    Tensor q_src = add(outs.o_vision, toks.l_q);
    Tensor k_src = add(concat_rows(outs.o_emo, outs.o_text), toks.l_k);
    Tensor q_lin = linear(m.cross.q_in, q_src);
    Tensor k_lin = linear(m.cross.k_in, k_src);
    std::vector<double> expect(3 * 8, 0.0);
    const size_t dk = 8 / 4;
    for (size_t h = 0; h < 4; ++h) {
        Tensor qh = matmul(q_lin, m.cross.head_q[h]);
        Tensor kh = matmul(k_lin, m.cross.head_k[h]);
        Tensor vh = matmul(outs.o_context, m.cross.head_v[h]);
        for (size_t i = 0; i < 3; ++i) {
            std::vector<double> logits(3, 0.0);
            for (size_t j = 0; j < 3; ++j)
                for (size_t c = 0; c < dk; ++c) logits[j] += matref(qh, i, c) * matref(kh, j, c);
            double mx = std::max({logits[0], logits[1], logits[2]});
            double denom = 0;
            for (double& l : logits) {
                l = std::exp(l / std::sqrt(double(dk)) - mx / std::sqrt(double(dk)));
                denom += l;
            }
            for (size_t j = 0; j < 3; ++j)
                for (size_t c = 0; c < 8; ++c) expect[i * 8 + c] += logits[j] / denom * matref(vh, j, c);
        }
    }
    Tensor res = linear(m.cross.residual, q_src);
    for (size_t i = 0; i < expect.size(); ++i) expect[i] += res.data()[i];
    for (size_t i = 0; i < expect.size(); ++i)
        CHECK(std::abs(cm.alpha.data()[i] - expect[i]) < 1e-9);
}

TEST_CASE("attention maps are row-stochastic and shift-invariant at the probability level") {
    ModelConfig cfg = tiny_config();
    ModelState m = ModelState::init(cfg, 67);
    Rng rng(37);
    Scene s = random_scene(rng, 4, cfg.patch_grid, cfg.patch_width, cfg.d_vision);
    Command c = random_command(rng, 5, m.cfg.vocab_size);
    EncoderOutputs outs = run_encoders(m, s, c);
    PositionTokens toks = position_tokens(m, c.tokens, s);
    CrossModalOutput a = cross_modal_attention(m, outs, toks);
    for (const Tensor& map : a.attention_maps) {
        for (size_t i = 0; i < map.rows(); ++i) {
            double total = 0;
            for (size_t j = 0; j < map.cols(); ++j) total += map.at(i, j);
            CHECK(std::abs(total - 1.0) < 1e-6);
        }
    }

    // shifting every key row by a constant vector shifts each query's logits
    // uniformly; probabilities must not move
    for (auto& v : m.cross.k_in.b.node()->value) v += 3.7;
    CrossModalOutput b = cross_modal_attention(m, outs, toks);
    for (size_t h = 0; h < a.attention_maps.size(); ++h)
        for (size_t i = 0; i < a.attention_maps[h].numel(); ++i)
            CHECK(std::abs(a.attention_maps[h].data()[i] - b.attention_maps[h].data()[i]) < 1e-9);
}

TEST_CASE("fuse keeps shape, is deterministic, and gradients flow through the pair") {
    ModelConfig cfg = tiny_config(8, 8, 2, 1, 1, 1, 4);
    cfg.cross_heads = 2;
    cfg.attn_width = 8;
    ModelState m = ModelState::init(cfg, 71);
    Rng rng(41);

    Tensor alpha = random_tensor({5, 8}, rng);
    Tensor f1 = fuse(m, alpha);
    Tensor f2 = fuse(m, alpha);
    CHECK(f1.rows() == 5);
    CHECK(f1.cols() == 8);
    for (size_t i = 0; i < f1.numel(); ++i) CHECK(f1.data()[i] == f2.data()[i]);

    // grad check through fuse(cross_modal_attention(...)) w.r.t. o_vision
    EncoderOutputs base = make_outs(rng, 2, 2, 4, 8, 8);
    PositionTokens toks{random_tensor({2, 8}, rng), random_tensor({3, 8}, rng)};
    auto fn = [&](std::vector<Tensor>& in) {
        EncoderOutputs outs = base;
        outs.o_vision = in[0];
        outs.o_context = in[1];
        CrossModalOutput cm = run_cross_modal(m, outs, toks);
        return mean_all(cm.alpha_bar);
    };
    std::vector<Tensor> inputs = {base.o_vision.detach(), base.o_context.detach()};
    CHECK(grad_check(fn, inputs) < 1e-4);
}
