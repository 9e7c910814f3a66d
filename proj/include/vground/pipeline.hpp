#pragma once

#include <string>
#include <vector>

#include "vground/attention.hpp"
#include "vground/data.hpp"
#include "vground/decoder.hpp"
#include "vground/encoders.hpp"
#include "vground/model.hpp"

namespace vground {

struct ForwardResult {
    EncoderOutputs enc;
    PositionTokens toks;
    CrossModalOutput cm;
    LayerStack stack;
    Tensor layer_attn;         // N x (m+1)
    Tensor logits;      // N x 1, sigmoid targets during training
    Tensor credibility; // 1 x N softmax over regions
};

// Full pipeline: encoders -> cross-modal attention -> decoder -> layer-attention fusion
// -> scoring. Pure given (model, scene, command).
ForwardResult forward_scene(const ModelState& m, const Scene& scene, const Command& command);

struct Prediction {
    std::string scene_id;
    std::string command_text;
    EmotionCategory emotion = EmotionCategory::Informative;
    size_t k = 1;
    std::vector<double> credibility;      // length N, sums to 1
    std::vector<size_t> ranked_regions;   // permutation of 0..N-1, ties -> lower index
    std::vector<size_t> top_k;            // first k of ranked_regions
    Box selected_box;                     // argmax region's box

    std::string to_json() const;
};

Prediction predict(const ModelState& m, const Scene& scene, const Command& command, size_t k);

}  // namespace vground
