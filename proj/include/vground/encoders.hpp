#pragma once

#include <cstdint>
#include <vector>

#include "vground/data.hpp"
#include "vground/model.hpp"
#include "vground/tensor.hpp"

namespace vground {

// The four encoder outputs feeding the cross-modal stage. text_mask flags
// valid (non-pad) token rows; every attention over text keys honors it.
struct EncoderOutputs {
    Tensor o_text;     // T x d
    Tensor o_emo;      // 1 x d
    Tensor o_vision;   // N x d_vision
    Tensor o_context;  // (P*P + T) x d
    std::vector<uint8_t> text_mask;  // length T
};

std::vector<uint8_t> token_mask(const std::vector<int>& tokens);

// Token + learned positional embedding through the bidirectional
// self-attention stack. Pad positions are masked out of every softmax.
Tensor encode_text(const ModelState& m, const std::vector<int>& tokens);

// Learned 3 x d embedding-table lookup.
Tensor embed_emotion(const ModelState& m, EmotionCategory category);

// Stacks region feature vectors as N x d_vision, preserving region order.
Tensor region_features(const Scene& scene, size_t d_vision);

// Patch feature grid as a (P*P) x patch_width constant matrix.
Tensor patch_matrix(const Scene& scene);

// Patch transformer over the grid, row-concatenated with o_text, then one
// fusion block; (P*P + T) x d.
Tensor encode_context(const ModelState& m, const Scene& scene, const Tensor& o_text,
                      const std::vector<uint8_t>& text_mask);

EncoderOutputs run_encoders(const ModelState& m, const Scene& scene, const Command& command);

}  // namespace vground
