#pragma once

#include <cstdint>
#include <vector>

#include "vground/data.hpp"
#include "vground/encoders.hpp"
#include "vground/model.hpp"
#include "vground/tensor.hpp"

namespace vground {

// Learned position embeddings: l_q from the command (pooled token embedding
// broadcast to the vision rows), l_k from the image patches (pooled patch
// embedding broadcast to the emotion+text rows).
struct PositionTokens {
    Tensor l_q;  // N x d_vision
    Tensor l_k;  // (1 + T) x d
};

PositionTokens position_tokens(const ModelState& m, const std::vector<int>& tokens, const Scene& scene);

struct CrossModalOutput {
    Tensor alpha;      // query rows x d
    Tensor alpha_bar;  // query rows x d (after the fusion block)
    // Per-head row-stochastic attention maps (query rows x key rows), detached.
    std::vector<Tensor> attention_maps;
};

// Multi-head cross-modal attention: Q from the vision rows plus l_q, K from
// (emotion | text) plus l_k, V from the context rows pooled onto the key rows
// by a learned alignment attention (skipped when the row counts already
// agree). Heads are summed, not concatenated, and the residual projection of
// the query source is added. qk_swap exchanges the two input roles.
CrossModalOutput cross_modal_attention(const ModelState& m, const EncoderOutputs& outs,
                                       const PositionTokens& toks);

// One self-attention encoder block over alpha's rows.
Tensor fuse(const ModelState& m, const Tensor& alpha, const std::vector<uint8_t>* mask = nullptr);

// cross_modal_attention followed by fuse, with alpha_bar filled in.
CrossModalOutput run_cross_modal(const ModelState& m, const EncoderOutputs& outs,
                                 const PositionTokens& toks);

}  // namespace vground
