#include "vground/decoder.hpp"

#include "vground/error.hpp"

namespace vground {

LayerStack decode_stack(const ModelState& m, const Tensor& alpha_bar, const Tensor& l_q,
                        const Tensor& region_reprs, const std::vector<uint8_t>* memory_mask) {
    if (m.cfg.decoder_layers < 1) throw ValidationError("decoder: m must be >= 1");
    Tensor skip = linear(m.skip_proj, l_q);  // N x d

    LayerStack stack;
    Tensor h = region_reprs;
    stack.hidden.push_back(h);
    for (size_t l = 0; l < m.decoder.size(); ++l) {
        const DecoderLayerParams& p = m.decoder[l];
        Tensor x = add(h, skip);
        Tensor a = layer_norm_rows(add(x, multi_head_attention(p.self_attn, x, x, nullptr)),
                                   p.ln1.gamma, p.ln1.beta, m.cfg.ln_eps);
        Tensor b = layer_norm_rows(
            add(a, multi_head_attention(p.cross_attn, a, alpha_bar, memory_mask)), p.ln2.gamma,
            p.ln2.beta, m.cfg.ln_eps);
        Tensor f = linear(p.ff2, gelu(linear(p.ff1, b)));
        h = layer_norm_rows(add(b, f), p.ln3.gamma, p.ln3.beta, m.cfg.ln_eps);
        for (double v : h.data())
            if (!std::isfinite(v))
                throw NumericError("decoder: non-finite state at layer " + std::to_string(l + 1));
        stack.hidden.push_back(h);
    }
    return stack;
}

Tensor layer_attention_weights(const ModelState& m, const LayerStack& stack) {
    std::vector<Tensor> score_cols;
    score_cols.reserve(stack.hidden.size());
    for (const Tensor& h : stack.hidden)
        score_cols.push_back(matmul(tanh(matmul(h, m.layer_attn_w)), m.layer_attn_u));  // N x 1
    Tensor scores = hstack(score_cols);  // N x (m+1)
    return softmax_rows(scores);
}

Tensor region_logits(const ModelState& m, const LayerStack& stack, const Tensor& layer_attn) {
    if (layer_attn.cols() != stack.layers())
        throw ValidationError("region_logits: layer attention columns do not match the layer stack");
    Tensor fused;
    for (size_t l = 0; l < stack.layers(); ++l) {
        Tensor weighted = mul_colvec(stack.hidden[l], slice_cols(layer_attn, l, l + 1));
        fused = l == 0 ? weighted : add(fused, weighted);
    }
    return linear(m.score2, gelu(linear(m.score1, fused)));  // N x 1
}

}  // namespace vground
