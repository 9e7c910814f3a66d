#include "vground/model.hpp"

#include <cmath>

#include "vground/error.hpp"
#include "vground/text.hpp"

namespace vground {

void ModelConfig::validate() const {
    auto positive = [](size_t v, const char* name) {
        if (v < 1) throw ValidationError(std::string("model config: ") + name + " must be >= 1");
    };
    positive(d, "d");
    positive(d_vision, "d_vision");
    positive(attn_width, "attn_width");
    positive(cross_heads, "cross_heads");
    positive(text_layers, "text_layers");
    positive(text_heads, "text_heads");
    positive(context_layers, "context_layers");
    positive(context_heads, "context_heads");
    positive(decoder_layers, "decoder_layers");
    positive(decoder_heads, "decoder_heads");
    positive(patch_grid, "patch_grid");
    positive(patch_width, "patch_width");
    positive(max_tokens, "max_tokens");
    positive(mlp_ratio, "mlp_ratio");
    if (ln_eps <= 0) throw ValidationError("model config: ln_eps must be positive");
    if (d % text_heads) throw ValidationError("model config: text_heads must divide d");
    if (d % context_heads) throw ValidationError("model config: context_heads must divide d");
    if (d % decoder_heads) throw ValidationError("model config: decoder_heads must divide d");
    if (attn_width % cross_heads)
        throw ValidationError("model config: cross_heads must divide attn_width");
}

namespace {

Tensor init_weight(Rng& rng, size_t in, size_t out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    return Tensor::uniform({in, out}, rng, -bound, bound);
}

Tensor init_table(Rng& rng, size_t rows, size_t width) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    return Tensor::uniform({rows, width}, rng, -bound, bound);
}

LinearParams make_linear(Rng& rng, size_t in, size_t out) {
    return {init_weight(rng, in, out), Tensor::zeros({out})};
}

LayerNormParams make_ln(size_t width) {
    return {Tensor::full({width}, 1.0), Tensor::zeros({width})};
}

AttentionParams make_attention(Rng& rng, size_t width, size_t heads) {
    AttentionParams p;
    p.q = make_linear(rng, width, width);
    p.k = make_linear(rng, width, width);
    p.v = make_linear(rng, width, width);
    p.out = make_linear(rng, width, width);
    p.heads = heads;
    return p;
}

BlockParams make_block(Rng& rng, size_t width, size_t heads, size_t mlp_ratio) {
    BlockParams b;
    b.attn = make_attention(rng, width, heads);
    b.ln1 = make_ln(width);
    b.ff1 = make_linear(rng, width, width * mlp_ratio);
    b.ff2 = make_linear(rng, width * mlp_ratio, width);
    b.ln2 = make_ln(width);
    return b;
}

DecoderLayerParams make_decoder_layer(Rng& rng, size_t width, size_t heads, size_t mlp_ratio) {
    DecoderLayerParams l;
    l.self_attn = make_attention(rng, width, heads);
    l.ln1 = make_ln(width);
    l.cross_attn = make_attention(rng, width, heads);
    l.ln2 = make_ln(width);
    l.ff1 = make_linear(rng, width, width * mlp_ratio);
    l.ff2 = make_linear(rng, width * mlp_ratio, width);
    l.ln3 = make_ln(width);
    return l;
}

using Visitor = std::function<void(const std::string&, Tensor&)>;

void visit_linear(const std::string& prefix, LinearParams& p, const Visitor& fn) {
    fn(prefix + ".w", p.w);
    fn(prefix + ".b", p.b);
}

void visit_ln(const std::string& prefix, LayerNormParams& p, const Visitor& fn) {
    fn(prefix + ".gamma", p.gamma);
    fn(prefix + ".beta", p.beta);
}

void visit_attention(const std::string& prefix, AttentionParams& p, const Visitor& fn) {
    visit_linear(prefix + ".q", p.q, fn);
    visit_linear(prefix + ".k", p.k, fn);
    visit_linear(prefix + ".v", p.v, fn);
    visit_linear(prefix + ".out", p.out, fn);
}

void visit_block(const std::string& prefix, BlockParams& p, const Visitor& fn) {
    visit_attention(prefix + ".attn", p.attn, fn);
    visit_ln(prefix + ".ln1", p.ln1, fn);
    visit_linear(prefix + ".ff1", p.ff1, fn);
    visit_linear(prefix + ".ff2", p.ff2, fn);
    visit_ln(prefix + ".ln2", p.ln2, fn);
}

}  // namespace

ModelState ModelState::init(const ModelConfig& cfg_in, uint64_t seed) {
    ModelConfig cfg = cfg_in;
    if (cfg.vocab_size == 0) cfg.vocab_size = Vocabulary::builtin().size();
    cfg.validate();

    Rng rng(seed);
    ModelState m;
    m.cfg = cfg;

    m.tok_embed = init_table(rng, cfg.vocab_size, cfg.d);
    m.pos_embed = init_table(rng, cfg.max_tokens, cfg.d);
    for (size_t i = 0; i < cfg.text_layers; ++i)
        m.text_blocks.push_back(make_block(rng, cfg.d, cfg.text_heads, cfg.mlp_ratio));

    m.emotion_embed = init_table(rng, 3, cfg.d);

    m.patch_embed = make_linear(rng, cfg.patch_width, cfg.d);
    m.patch_pos = init_table(rng, cfg.patch_grid * cfg.patch_grid, cfg.d);
    for (size_t i = 0; i < cfg.context_layers; ++i)
        m.context_blocks.push_back(make_block(rng, cfg.d, cfg.context_heads, cfg.mlp_ratio));
    m.fusion_block = make_block(rng, cfg.d, cfg.context_heads, cfg.mlp_ratio);

    m.pos_tok_cmd_embed = init_table(rng, cfg.vocab_size, cfg.d_vision);
    m.pos_tok_q_proj = make_linear(rng, cfg.d_vision, cfg.d_vision);
    m.pos_tok_patch_embed = make_linear(rng, cfg.patch_width, cfg.d);
    m.pos_tok_k_proj = make_linear(rng, cfg.d, cfg.d);

    const size_t q_src = cfg.qk_swap ? cfg.d : cfg.d_vision;
    const size_t k_src = cfg.qk_swap ? cfg.d_vision : cfg.d;
    const size_t dk = cfg.attn_width / cfg.cross_heads;
    m.cross.q_in = make_linear(rng, q_src, cfg.attn_width);
    m.cross.k_in = make_linear(rng, k_src, cfg.attn_width);
    for (size_t i = 0; i < cfg.cross_heads; ++i) {
        m.cross.head_q.push_back(init_weight(rng, cfg.attn_width, dk));
        m.cross.head_k.push_back(init_weight(rng, cfg.attn_width, dk));
        m.cross.head_v.push_back(init_weight(rng, cfg.d, cfg.d));
    }
    m.cross.residual = make_linear(rng, q_src, cfg.d);
    m.cross.align_q = make_linear(rng, cfg.attn_width, cfg.align_width_or_default());
    m.cross.align_k = make_linear(rng, cfg.d, cfg.align_width_or_default());
    m.cross.fuse = make_block(rng, cfg.d, cfg.cross_heads, cfg.mlp_ratio);

    m.skip_proj = make_linear(rng, cfg.d_vision, cfg.d);
    m.region_embed = make_linear(rng, cfg.d_vision, cfg.d);
    for (size_t i = 0; i < cfg.decoder_layers; ++i)
        m.decoder.push_back(make_decoder_layer(rng, cfg.d, cfg.decoder_heads, cfg.mlp_ratio));

    m.layer_attn_w = init_weight(rng, cfg.d, cfg.layer_attn_hidden_or_default());
    m.layer_attn_u = init_weight(rng, cfg.layer_attn_hidden_or_default(), 1);
    m.score1 = make_linear(rng, cfg.d, cfg.score_hidden_or_default());
    m.score2 = make_linear(rng, cfg.score_hidden_or_default(), 1);

    m.visit([](const std::string&, Tensor& t) { t.set_requires_grad(true); });
    return m;
}

void ModelState::visit(const Visitor& fn) {
    fn("text.tok_embed", tok_embed);
    fn("text.pos_embed", pos_embed);
    for (size_t i = 0; i < text_blocks.size(); ++i)
        visit_block("text.block" + std::to_string(i), text_blocks[i], fn);

    fn("emotion.embed", emotion_embed);

    visit_linear("context.patch_embed", patch_embed, fn);
    fn("context.patch_pos", patch_pos);
    for (size_t i = 0; i < context_blocks.size(); ++i)
        visit_block("context.block" + std::to_string(i), context_blocks[i], fn);
    visit_block("context.fusion", fusion_block, fn);

    fn("postok.cmd_embed", pos_tok_cmd_embed);
    visit_linear("postok.q_proj", pos_tok_q_proj, fn);
    visit_linear("postok.patch_embed", pos_tok_patch_embed, fn);
    visit_linear("postok.k_proj", pos_tok_k_proj, fn);

    visit_linear("cross.q_in", cross.q_in, fn);
    visit_linear("cross.k_in", cross.k_in, fn);
    for (size_t i = 0; i < cross.head_q.size(); ++i) {
        fn("cross.head" + std::to_string(i) + ".q", cross.head_q[i]);
        fn("cross.head" + std::to_string(i) + ".k", cross.head_k[i]);
        fn("cross.head" + std::to_string(i) + ".v", cross.head_v[i]);
    }
    visit_linear("cross.residual", cross.residual, fn);
    visit_linear("cross.align_q", cross.align_q, fn);
    visit_linear("cross.align_k", cross.align_k, fn);
    visit_block("cross.fuse", cross.fuse, fn);

    visit_linear("decoder.skip", skip_proj, fn);
    visit_linear("decoder.region_embed", region_embed, fn);
    for (size_t i = 0; i < decoder.size(); ++i) {
        const std::string p = "decoder.layer" + std::to_string(i);
        visit_attention(p + ".self", decoder[i].self_attn, fn);
        visit_ln(p + ".ln1", decoder[i].ln1, fn);
        visit_attention(p + ".cross", decoder[i].cross_attn, fn);
        visit_ln(p + ".ln2", decoder[i].ln2, fn);
        visit_linear(p + ".ff1", decoder[i].ff1, fn);
        visit_linear(p + ".ff2", decoder[i].ff2, fn);
        visit_ln(p + ".ln3", decoder[i].ln3, fn);
    }

    fn("layer_attn.w", layer_attn_w);
    fn("layer_attn.u", layer_attn_u);
    visit_linear("score.fc1", score1, fn);
    visit_linear("score.fc2", score2, fn);
}

ModelState ModelState::clone() {
    ModelState copy = ModelState::init(cfg, 0);
    auto src = parameters();
    auto dst = copy.parameters();
    for (size_t i = 0; i < src.size(); ++i) dst[i].second.node()->value = src[i].second.data();
    return copy;
}

std::vector<std::pair<std::string, Tensor>> ModelState::parameters() {
    std::vector<std::pair<std::string, Tensor>> out;
    visit([&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
    return out;
}

void ModelState::zero_grads() {
    visit([](const std::string&, Tensor& t) { t.zero_grad(); });
}

size_t ModelState::param_count() {
    size_t n = 0;
    visit([&](const std::string&, Tensor& t) { n += t.numel(); });
    return n;
}

// ---------------------------------------------------------------------------
// shared forward helpers
// ---------------------------------------------------------------------------

Tensor linear(const LinearParams& p, const Tensor& x) { return add_rowvec(matmul(x, p.w), p.b); }

Tensor multi_head_attention(const AttentionParams& p, const Tensor& q_in, const Tensor& kv_in,
                            const std::vector<uint8_t>* kv_mask) {
    const size_t width = p.q.w.shape()[1];
    if (width % p.heads) throw ValidationError("attention: head count must divide width");
    const size_t dh = width / p.heads;
    Tensor q = linear(p.q, q_in);
    Tensor k = linear(p.k, kv_in);
    Tensor v = linear(p.v, kv_in);
    const double scale_f = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> heads;
    heads.reserve(p.heads);
    for (size_t h = 0; h < p.heads; ++h) {
        Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
        Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
        Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
        Tensor logits = scale(matmul(qh, transpose(kh)), scale_f);
        Tensor probs = softmax_rows(logits, kv_mask);
        heads.push_back(matmul(probs, vh));
    }
    return linear(p.out, p.heads == 1 ? heads[0] : hstack(heads));
}

Tensor encoder_block(const BlockParams& p, const Tensor& x, const std::vector<uint8_t>* kv_mask,
                     double ln_eps) {
    Tensor a = layer_norm_rows(add(x, multi_head_attention(p.attn, x, x, kv_mask)), p.ln1.gamma,
                               p.ln1.beta, ln_eps);
    Tensor f = linear(p.ff2, gelu(linear(p.ff1, a)));
    return layer_norm_rows(add(a, f), p.ln2.gamma, p.ln2.beta, ln_eps);
}

}  // namespace vground
