#pragma once

#include <cstdint>
#include <vector>

#include "vground/model.hpp"
#include "vground/tensor.hpp"

namespace vground {

// Hidden states of all decoder layers; index 0 is the embedding layer, so a
// depth-m decoder records m+1 entries of shape N x d.
struct LayerStack {
    std::vector<Tensor> hidden;

    size_t layers() const { return hidden.size(); }
    size_t regions() const { return hidden.empty() ? 0 : hidden[0].rows(); }
};

// m stacked layers of self-attention over regions, cross-attention to
// alpha_bar, and feed-forward, with the projected l_q skip added at every
// layer input. Non-finite intermediates abort naming the layer.
LayerStack decode_stack(const ModelState& m, const Tensor& alpha_bar, const Tensor& l_q,
                        const Tensor& region_reprs, const std::vector<uint8_t>* memory_mask = nullptr);

// Per-region softmax over layers of the additive scores <u, tanh(W h)>;
// N x (m+1), each row a probability vector.
Tensor layer_attention_weights(const ModelState& m, const LayerStack& stack);

// Layer-attention-fused representations through the scoring MLP; N x 1 logits.
Tensor region_logits(const ModelState& m, const LayerStack& stack, const Tensor& layer_attn);

}  // namespace vground
