#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vground/data.hpp"
#include "vground/model.hpp"
#include "vground/rng.hpp"
#include "vground/tensor.hpp"

namespace vground::testing {

inline Tensor identity(size_t n) {
    std::vector<double> data(n * n, 0.0);
    for (size_t i = 0; i < n; ++i) data[i * n + i] = 1.0;
    return Tensor({n, n}, std::move(data));
}

inline Tensor random_tensor(std::vector<size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    return Tensor::uniform(std::move(shape), rng, lo, hi);
}

// Counting oracle for IoU: rasterizes both boxes onto a fixed grid whose cell
// size is `resolution` of the image span and counts cell centers. Kept
// independent of the analytic implementation on purpose. Exact when box
// coordinates sit on the grid.
inline double raster_iou(const Box& a, const Box& b, double image_span, double resolution = 0.001) {
    const double u = image_span * resolution;
    const double x0 = std::min(a.x1, b.x1), x1 = std::max(a.x2, b.x2);
    const double y0 = std::min(a.y1, b.y1), y1 = std::max(a.y2, b.y2);
    const long ix0 = static_cast<long>(std::floor(x0 / u));
    const long ix1 = static_cast<long>(std::ceil(x1 / u));
    const long iy0 = static_cast<long>(std::floor(y0 / u));
    const long iy1 = static_cast<long>(std::ceil(y1 / u));
    size_t inter = 0, uni = 0;
    for (long ix = ix0; ix < ix1; ++ix) {
        const double cx = (static_cast<double>(ix) + 0.5) * u;
        const bool in_ax = cx > a.x1 && cx < a.x2;
        const bool in_bx = cx > b.x1 && cx < b.x2;
        if (!in_ax && !in_bx) continue;
        for (long iy = iy0; iy < iy1; ++iy) {
            const double cy = (static_cast<double>(iy) + 0.5) * u;
            const bool in_a = in_ax && cy > a.y1 && cy < a.y2;
            const bool in_b = in_bx && cy > b.y1 && cy < b.y2;
            if (in_a && in_b) ++inter;
            if (in_a || in_b) ++uni;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Random box with coordinates on the 1/1000 grid of the unit span, so the
// counting oracle is exact.
inline Box random_grid_box(Rng& rng) {
    const int64_t x1 = rng.uniform_int(0, 900);
    const int64_t y1 = rng.uniform_int(0, 900);
    const int64_t x2 = rng.uniform_int(x1 + 20, 1000);
    const int64_t y2 = rng.uniform_int(y1 + 20, 1000);
    return Box{x1 / 1000.0, y1 / 1000.0, x2 / 1000.0, y2 / 1000.0};
}

inline ModelConfig tiny_config(size_t d = 16, size_t d_vision = 16, size_t heads = 2,
                               size_t layers = 1, size_t decoder_layers = 2, size_t patch_grid = 2,
                               size_t patch_width = 6) {
    ModelConfig cfg;
    cfg.d = d;
    cfg.d_vision = d_vision;
    cfg.attn_width = d;
    cfg.cross_heads = heads;
    cfg.text_layers = layers;
    cfg.text_heads = heads;
    cfg.context_layers = layers;
    cfg.context_heads = heads;
    cfg.decoder_layers = decoder_layers;
    cfg.decoder_heads = heads;
    cfg.patch_grid = patch_grid;
    cfg.patch_width = patch_width;
    cfg.max_tokens = 16;
    cfg.mlp_ratio = 2;
    return cfg;
}

// A random but schema-valid scene for fuzzing (no planted correspondence).
inline Scene random_scene(Rng& rng, size_t n_regions, size_t patch_grid, size_t patch_width,
                          size_t feature_width) {
    Scene s;
    s.id = "fuzz";
    s.image_w = 100;
    s.image_h = 100;
    s.patch_grid = patch_grid;
    s.patch_width = patch_width;
    s.patches.assign(patch_grid * patch_grid, {});
    for (auto& row : s.patches) {
        row.resize(patch_width);
        for (auto& v : row) v = rng.uniform(-1, 1);
    }
    for (size_t i = 0; i < n_regions; ++i) {
        RegionProposal r;
        const double x1 = rng.uniform(0, 80), y1 = rng.uniform(0, 80);
        r.box = {x1, y1, x1 + rng.uniform(5, 19), y1 + rng.uniform(5, 19)};
        r.features.resize(feature_width);
        for (auto& v : r.features) v = rng.uniform(-1, 1);
        s.regions.push_back(std::move(r));
    }
    s.gt_box = s.regions[0].box;
    return s;
}

inline Command random_command(Rng& rng, size_t n_tokens, size_t vocab_size) {
    Command c;
    c.raw_text = "fuzz command";
    c.word_count = n_tokens;
    c.emotion = static_cast<EmotionCategory>(rng.uniform_int(0, 2));
    for (size_t i = 0; i < n_tokens; ++i)
        c.tokens.push_back(static_cast<int>(rng.uniform_int(2, static_cast<int64_t>(vocab_size) - 1)));
    return c;
}

}  // namespace vground::testing
