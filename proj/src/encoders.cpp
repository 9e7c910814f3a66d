#include "vground/encoders.hpp"

#include "vground/error.hpp"
#include "vground/text.hpp"

namespace vground {

std::vector<uint8_t> token_mask(const std::vector<int>& tokens) {
    std::vector<uint8_t> mask(tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) mask[i] = tokens[i] != Vocabulary::kPad ? 1 : 0;
    return mask;
}

Tensor encode_text(const ModelState& m, const std::vector<int>& tokens) {
    if (tokens.empty()) throw ValidationError("encode_text: empty token sequence");
    if (tokens.size() > m.cfg.max_tokens)
        throw ValidationError("encode_text: " + std::to_string(tokens.size()) +
                              " tokens exceed max length " + std::to_string(m.cfg.max_tokens) +
                              "; caller must truncate");
    for (int id : tokens)
        if (id < 0 || static_cast<size_t>(id) >= m.cfg.vocab_size)
            throw ValidationError("encode_text: token id " + std::to_string(id) +
                                  " outside vocabulary of size " + std::to_string(m.cfg.vocab_size));
    std::vector<int> positions(tokens.size());
    for (size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
    Tensor x = add(gather_rows(m.tok_embed, tokens), gather_rows(m.pos_embed, positions));
    const std::vector<uint8_t> mask = token_mask(tokens);
    for (const auto& block : m.text_blocks) x = encoder_block(block, x, &mask, m.cfg.ln_eps);
    return x;
}

Tensor embed_emotion(const ModelState& m, EmotionCategory category) {
    return gather_rows(m.emotion_embed, {static_cast<int>(category)});
}

Tensor region_features(const Scene& scene, size_t d_vision) {
    if (scene.regions.empty()) throw ValidationError("region features: scene has no regions");
    const size_t n = scene.regions.size();
    std::vector<double> data;
    data.reserve(n * d_vision);
    for (size_t i = 0; i < n; ++i) {
        const auto& f = scene.regions[i].features;
        if (f.size() != d_vision)
            throw ValidationError("region features: region " + std::to_string(i) + " has length " +
                                  std::to_string(f.size()) + ", expected d_vision " +
                                  std::to_string(d_vision));
        data.insert(data.end(), f.begin(), f.end());
    }
    return Tensor({n, d_vision}, std::move(data));
}

Tensor patch_matrix(const Scene& scene) {
    if (scene.patches.empty()) throw ValidationError("patch matrix: scene has no patches");
    const size_t rows = scene.patches.size();
    const size_t width = scene.patches[0].size();
    std::vector<double> data;
    data.reserve(rows * width);
    for (const auto& row : scene.patches) {
        if (row.size() != width) throw ValidationError("patch matrix: ragged patch rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({rows, width}, std::move(data));
}

Tensor encode_context(const ModelState& m, const Scene& scene, const Tensor& o_text,
                      const std::vector<uint8_t>& text_mask) {
    if (scene.patch_width != m.cfg.patch_width)
        throw ValidationError("context encoder: scene patch width " + std::to_string(scene.patch_width) +
                              " does not match configured " + std::to_string(m.cfg.patch_width));
    if (scene.patches.size() != m.cfg.patch_grid * m.cfg.patch_grid)
        throw ValidationError("context encoder: scene has " + std::to_string(scene.patches.size()) +
                              " patches, config expects " +
                              std::to_string(m.cfg.patch_grid * m.cfg.patch_grid));
    if (o_text.cols() != m.cfg.d)
        throw ValidationError("context encoder: text width " + std::to_string(o_text.cols()) +
                              " does not match d " + std::to_string(m.cfg.d));
    Tensor x = add(linear(m.patch_embed, patch_matrix(scene)), m.patch_pos);
    for (const auto& block : m.context_blocks) x = encoder_block(block, x, nullptr, m.cfg.ln_eps);
    Tensor cat = concat_rows(x, o_text);
    std::vector<uint8_t> mask(x.rows(), 1);
    mask.insert(mask.end(), text_mask.begin(), text_mask.end());
    return encoder_block(m.fusion_block, cat, &mask, m.cfg.ln_eps);
}

EncoderOutputs run_encoders(const ModelState& m, const Scene& scene, const Command& command) {
    EncoderOutputs out;
    out.o_text = encode_text(m, command.tokens);
    out.text_mask = token_mask(command.tokens);
    out.o_emo = embed_emotion(m, command.emotion);
    out.o_vision = region_features(scene, m.cfg.d_vision);
    out.o_context = encode_context(m, scene, out.o_text, out.text_mask);
    return out;
}

}  // namespace vground
