#include "vground/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "vground/error.hpp"

namespace vground {

ForwardResult forward_scene(const ModelState& m, const Scene& scene, const Command& command) {
    ForwardResult r;
    r.enc = run_encoders(m, scene, command);
    r.toks = position_tokens(m, command.tokens, scene);
    r.cm = run_cross_modal(m, r.enc, r.toks);

    Tensor region_reprs;
    const std::vector<uint8_t>* memory_mask = nullptr;
    std::vector<uint8_t> text_rows_mask;
    if (m.cfg.qk_swap) {
        // alpha_bar rows follow the text side; decoder queries come from an
        // embedding of the vision rows so the region <-> row bijection holds.
        region_reprs = linear(m.region_embed, add(r.enc.o_vision, r.toks.l_q));
        text_rows_mask.assign(1, 1);
        text_rows_mask.insert(text_rows_mask.end(), r.enc.text_mask.begin(), r.enc.text_mask.end());
        memory_mask = &text_rows_mask;
    } else {
        region_reprs = r.cm.alpha_bar;
    }
    r.stack = decode_stack(m, r.cm.alpha_bar, r.toks.l_q, region_reprs, memory_mask);
    r.layer_attn = layer_attention_weights(m, r.stack);
    r.logits = region_logits(m, r.stack, r.layer_attn);
    r.credibility = softmax_rows(transpose(r.logits));  // 1 x N
    return r;
}

Prediction predict(const ModelState& m, const Scene& scene, const Command& command, size_t k) {
    const size_t n = scene.regions.size();
    if (k < 1 || k > n)
        throw ValidationError("predict: k = " + std::to_string(k) + " outside [1, " +
                              std::to_string(n) + "]");
    NoGradGuard ng;
    ForwardResult r = forward_scene(m, scene, command);

    Prediction p;
    p.scene_id = scene.id;
    p.command_text = command.raw_text;
    p.emotion = command.emotion;
    p.k = k;
    p.credibility = r.credibility.data();
    p.ranked_regions.resize(n);
    std::iota(p.ranked_regions.begin(), p.ranked_regions.end(), size_t(0));
    std::sort(p.ranked_regions.begin(), p.ranked_regions.end(), [&](size_t a, size_t b) {
        if (p.credibility[a] != p.credibility[b]) return p.credibility[a] > p.credibility[b];
        return a < b;
    });
    p.top_k.assign(p.ranked_regions.begin(), p.ranked_regions.begin() + static_cast<long>(k));
    p.selected_box = scene.regions[p.ranked_regions[0]].box;
    return p;
}

std::string Prediction::to_json() const {
    nlohmann::json j;
    j["scene_id"] = scene_id;
    j["command"] = command_text;
    j["emotion"] = emotion_label(emotion);
    j["k"] = k;
    j["credibility"] = credibility;
    j["ranked_regions"] = ranked_regions;
    j["top_k"] = top_k;
    j["selected_box"] = {selected_box.x1, selected_box.y1, selected_box.x2, selected_box.y2};
    return j.dump(2) + "\n";
}

}  // namespace vground
