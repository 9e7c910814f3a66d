#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "vground/tensor.hpp"

namespace vground {

// Model dimensions. Desk-scale defaults; benchmark-scale values (d=768,
// d_vision=1024, 16 text layers, 16 cross heads, 12 decoder layers) are legal.
struct ModelConfig {
    size_t d = 64;            // shared hidden width of text/emotion/context
    size_t d_vision = 64;     // region feature width
    size_t attn_width = 64;   // cross-modal projection width
    size_t cross_heads = 4;
    size_t text_layers = 2;
    size_t text_heads = 4;
    size_t context_layers = 2;
    size_t context_heads = 4;
    size_t decoder_layers = 3;  // m
    size_t decoder_heads = 4;
    size_t patch_grid = 4;   // P: patches per image side
    size_t patch_width = 16; // raw patch feature width
    size_t vocab_size = 0;   // 0 = builtin vocabulary size
    size_t max_tokens = 60;
    size_t mlp_ratio = 4;
    double ln_eps = 1e-12;
    size_t align_width = 0;  // 0 = attn_width
    size_t layer_attn_hidden = 0;   // 0 = d
    size_t score_hidden = 0; // 0 = d
    bool qk_swap = false;    // ablation: swap which modality feeds Q vs K

    void validate() const;
    size_t align_width_or_default() const { return align_width ? align_width : attn_width; }
    size_t layer_attn_hidden_or_default() const { return layer_attn_hidden ? layer_attn_hidden : d; }
    size_t score_hidden_or_default() const { return score_hidden ? score_hidden : d; }

    bool operator==(const ModelConfig&) const = default;
};

struct LinearParams {
    Tensor w;  // in x out
    Tensor b;  // out
};

struct LayerNormParams {
    Tensor gamma;
    Tensor beta;
};

struct AttentionParams {
    LinearParams q, k, v, out;
    size_t heads = 1;
};

// Post-LN transformer encoder block.
struct BlockParams {
    AttentionParams attn;
    LayerNormParams ln1;
    LinearParams ff1, ff2;
    LayerNormParams ln2;
};

struct DecoderLayerParams {
    AttentionParams self_attn;
    LayerNormParams ln1;
    AttentionParams cross_attn;
    LayerNormParams ln2;
    LinearParams ff1, ff2;
    LayerNormParams ln3;
};

struct CrossModalParams {
    LinearParams q_in;      // query-side input projection
    LinearParams k_in;      // key-side input projection
    std::vector<Tensor> head_q;  // attn_width x d_k, per head
    std::vector<Tensor> head_k;  // attn_width x d_k, per head
    std::vector<Tensor> head_v;  // d x d, per head (full value width)
    LinearParams residual;  // query-side source -> d
    LinearParams align_q;   // attn_width -> align_width (context alignment pooling)
    LinearParams align_k;   // d -> align_width
    BlockParams fuse;       // one encoder block over alpha rows
};

struct ModelState {
    ModelConfig cfg;

    Tensor tok_embed;  // vocab x d
    Tensor pos_embed;  // max_tokens x d
    std::vector<BlockParams> text_blocks;

    Tensor emotion_embed;  // 3 x d

    LinearParams patch_embed;  // patch_width -> d
    Tensor patch_pos;          // P*P x d
    std::vector<BlockParams> context_blocks;
    BlockParams fusion_block;

    Tensor pos_tok_cmd_embed;      // vocab x d_vision (command-side position tokens)
    LinearParams pos_tok_q_proj;   // d_vision -> d_vision
    LinearParams pos_tok_patch_embed;  // patch_width -> d (image-side position tokens)
    LinearParams pos_tok_k_proj;   // d -> d

    CrossModalParams cross;

    LinearParams skip_proj;     // d_vision -> d (l_q skip into decoder layers)
    LinearParams region_embed;  // d_vision -> d (decoder queries under qk_swap)
    std::vector<DecoderLayerParams> decoder;

    Tensor layer_attn_w;  // d x layer_attn_hidden
    Tensor layer_attn_u;  // layer_attn_hidden x 1
    LinearParams score1;  // d -> score_hidden
    LinearParams score2;  // score_hidden -> 1

    static ModelState init(const ModelConfig& cfg, uint64_t seed);

    // Deep copy of all parameter values.
    ModelState clone();

    // Deterministically ordered named parameters (dot-separated paths).
    std::vector<std::pair<std::string, Tensor>> parameters();
    void visit(const std::function<void(const std::string&, Tensor&)>& fn);
    void zero_grads();
    size_t param_count();
};

// ---- shared forward helpers ----

Tensor linear(const LinearParams& p, const Tensor& x);
// Standard multi-head attention (concatenated heads + output projection).
Tensor multi_head_attention(const AttentionParams& p, const Tensor& q_in, const Tensor& kv_in,
                            const std::vector<uint8_t>* kv_mask);
Tensor encoder_block(const BlockParams& p, const Tensor& x, const std::vector<uint8_t>* kv_mask,
                     double ln_eps);

}  // namespace vground
