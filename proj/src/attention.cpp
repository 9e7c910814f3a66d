#include "vground/attention.hpp"

#include <cmath>

#include "vground/error.hpp"

namespace vground {

PositionTokens position_tokens(const ModelState& m, const std::vector<int>& tokens, const Scene& scene) {
    if (tokens.empty()) throw ValidationError("position_tokens: empty token sequence");
    const std::vector<uint8_t> mask = token_mask(tokens);

    Tensor cmd = gather_rows(m.pos_tok_cmd_embed, tokens);            // T x d_vision
    Tensor q_row = linear(m.pos_tok_q_proj, mean_rows(cmd, &mask));   // 1 x d_vision
    Tensor l_q = tile_row(q_row, scene.regions.size());

    Tensor patches = linear(m.pos_tok_patch_embed, patch_matrix(scene));  // P*P x d
    Tensor k_row = linear(m.pos_tok_k_proj, mean_rows(patches));          // 1 x d
    Tensor l_k = tile_row(k_row, 1 + tokens.size());

    return {l_q, l_k};
}

CrossModalOutput cross_modal_attention(const ModelState& m, const EncoderOutputs& outs,
                                       const PositionTokens& toks) {
    const ModelConfig& cfg = m.cfg;
    const size_t heads = cfg.cross_heads;
    const size_t dk = cfg.attn_width / heads;

    // Query source: vision rows plus command-derived tokens. Key source:
    // (emotion | text) rows plus image-derived tokens. Text pads stay masked.
    Tensor vision_src = add(outs.o_vision, toks.l_q);                       // N x d_vision
    Tensor text_src = add(concat_rows(outs.o_emo, outs.o_text), toks.l_k);  // (1+T) x d
    std::vector<uint8_t> text_kv_mask(1, 1);
    text_kv_mask.insert(text_kv_mask.end(), outs.text_mask.begin(), outs.text_mask.end());

    Tensor q_src = cfg.qk_swap ? text_src : vision_src;
    Tensor k_src = cfg.qk_swap ? vision_src : text_src;
    const std::vector<uint8_t>* kv_mask = cfg.qk_swap ? nullptr : &text_kv_mask;

    Tensor q_lin = linear(m.cross.q_in, q_src);
    Tensor k_lin = linear(m.cross.k_in, k_src);

    // Context rows (patches + text) generally outnumber the key rows; a
    // learned attention pooling aligns them so the per-head product is
    // well-defined. When they already agree the context feeds V directly.
    std::vector<uint8_t> ctx_mask(outs.o_context.rows() - outs.text_mask.size(), 1);
    ctx_mask.insert(ctx_mask.end(), outs.text_mask.begin(), outs.text_mask.end());
    Tensor aligned;
    if (outs.o_context.rows() == k_lin.rows()) {
        aligned = outs.o_context;
    } else {
        const size_t aw = cfg.align_width_or_default();
        Tensor aq = linear(m.cross.align_q, k_lin);
        Tensor ak = linear(m.cross.align_k, outs.o_context);
        Tensor amap = softmax_rows(scale(matmul(aq, transpose(ak)), 1.0 / std::sqrt(double(aw))),
                                   &ctx_mask);
        aligned = matmul(amap, outs.o_context);
    }

    CrossModalOutput out;
    Tensor acc;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    for (size_t i = 0; i < heads; ++i) {
        Tensor qh = matmul(q_lin, m.cross.head_q[i]);
        Tensor kh = matmul(k_lin, m.cross.head_k[i]);
        Tensor vh = matmul(aligned, m.cross.head_v[i]);
        Tensor probs = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt_dk), kv_mask);
        out.attention_maps.push_back(probs.detach());
        Tensor head = matmul(probs, vh);
        acc = i == 0 ? head : add(acc, head);
    }
    out.alpha = add(acc, linear(m.cross.residual, q_src));
    return out;
}

Tensor fuse(const ModelState& m, const Tensor& alpha, const std::vector<uint8_t>* mask) {
    return encoder_block(m.cross.fuse, alpha, mask, m.cfg.ln_eps);
}

CrossModalOutput run_cross_modal(const ModelState& m, const EncoderOutputs& outs,
                                 const PositionTokens& toks) {
    CrossModalOutput out = cross_modal_attention(m, outs, toks);
    if (m.cfg.qk_swap) {
        // alpha rows are (emo | text); keep pad rows out of the fusion block.
        std::vector<uint8_t> mask(1, 1);
        mask.insert(mask.end(), outs.text_mask.begin(), outs.text_mask.end());
        out.alpha_bar = fuse(m, out.alpha, &mask);
    } else {
        out.alpha_bar = fuse(m, out.alpha);
    }
    return out;
}

}  // namespace vground
