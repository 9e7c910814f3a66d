#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vground/error.hpp"
#include "vground/metrics.hpp"
#include "vground/pipeline.hpp"
#include "vground/trainer.hpp"

using namespace vground;
using namespace vground::testing;

TEST_CASE("iou identity, disjoint, and hand case") {
    Box a{0, 0, 2, 2};
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, Box{3, 3, 4, 4}) == 0.0);
    // overlap 1, union 4+4-1=7; the grid counting oracle agrees exactly on
    // integer coordinates
    Box b{1, 1, 3, 3};
    CHECK(iou(a, b) == doctest::Approx(1.0 / 7));
    CHECK(raster_iou(a, b, 4.0) == doctest::Approx(1.0 / 7).epsilon(1e-9));
    CHECK_THROWS_AS(iou(Box{0, 0, 0, 2}, a), ValidationError);
    CHECK_THROWS_AS(iou(a, Box{1, 5, 2, 5}), ValidationError);
}

TEST_CASE("iou symmetry holds exactly") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        Box a = random_grid_box(rng);
        Box b = random_grid_box(rng);
        CHECK(iou(a, b) == iou(b, a));
        CHECK(iou(a, a) == 1.0);
    }
}

TEST_CASE("iou matches the rasterized counting oracle") {
    Rng rng(5);
    for (int i = 0; i < 250; ++i) {
        Box a = random_grid_box(rng);
        Box b = random_grid_box(rng);
        CHECK(std::abs(iou(a, b) - raster_iou(a, b, 1.0)) < 2e-3);
    }
}

TEST_CASE("iou is scale invariant") {
    Rng rng(7);
    for (double s : {0.001, 0.37, 3.0, 1e6}) {
        for (int i = 0; i < 40; ++i) {
            Box a = random_grid_box(rng);
            Box b = random_grid_box(rng);
            Box as{a.x1 * s, a.y1 * s, a.x2 * s, a.y2 * s};
            Box bs{b.x1 * s, b.y1 * s, b.x2 * s, b.y2 * s};
            CHECK(std::abs(iou(a, b) - iou(as, bs)) < 1e-12);
        }
    }
}

TEST_CASE("ap50 counting cases") {
    Box g{0, 0, 10, 10};
    std::vector<std::pair<Box, Box>> all_hit = {{g, g}, {g, g}};
    CHECK(ap50(all_hit) == 1.0);
    std::vector<std::pair<Box, Box>> all_miss = {{Box{20, 20, 30, 30}, g}};
    CHECK(ap50(all_miss) == 0.0);

    // 3 of 4 above threshold
    std::vector<std::pair<Box, Box>> mixed = {
        {g, g},
        {Box{0, 0, 10, 9}, g},   // iou 0.9
        {Box{0, 0, 10, 6}, g},   // iou 0.6
        {Box{0, 0, 10, 3}, g},   // iou 0.3
    };
    CHECK(ap50(mixed) == doctest::Approx(0.75));
    const std::vector<std::pair<Box, Box>> empty;
    CHECK_THROWS_AS(ap50(empty), ValidationError);

    // strict threshold: exactly 0.5 counts as a miss
    std::vector<std::pair<Box, Box>> boundary = {{Box{0, 0, 10, 5}, g}};
    CHECK(iou(boundary[0].first, boundary[0].second) == doctest::Approx(0.5));
    CHECK(ap50(boundary) == 0.0);
}

TEST_CASE("ap50 agrees with an independent indicator loop") {
    Rng rng(11);
    std::vector<std::pair<Box, Box>> pairs;
    for (int i = 0; i < 300; ++i) pairs.emplace_back(random_grid_box(rng), random_grid_box(rng));
    size_t hits = 0;
    for (const auto& [p, g] : pairs) {
        const double ix = std::max(0.0, std::min(p.x2, g.x2) - std::max(p.x1, g.x1));
        const double iy = std::max(0.0, std::min(p.y2, g.y2) - std::max(p.y1, g.y1));
        const double inter = ix * iy;
        const double u = (p.x2 - p.x1) * (p.y2 - p.y1) + (g.x2 - g.x1) * (g.y2 - g.y1) - inter;
        if (inter / u > 0.5) ++hits;
    }
    CHECK(ap50(pairs) == doctest::Approx(double(hits) / pairs.size()));
}

namespace {

Dataset tiny_dataset(size_t count, bool long_text = false) {
    GenParams p;
    p.n_regions = 4;
    p.colors = 3;
    p.kinds = 3;
    p.feature_width = 16;
    p.patch_width = 10;
    p.patch_grid = 2;
    p.long_text_rate = long_text ? 1.0 : 0.0;
    return generate_dataset(11, count, p, Vocabulary::builtin());
}

ModelConfig tiny_eval_config() {
    ModelConfig cfg = tiny_config(16, 16, 2, 1, 2, 2, 10);
    return cfg;
}

}  // namespace

TEST_CASE("evaluate marks empty subsets absent rather than zero") {
    Dataset ds = tiny_dataset(6);  // long_text_rate 0: no long commands
    ModelState m = ModelState::init(tiny_eval_config(), 3);
    MetricsReport rep = evaluate(m, ds, Split::None, SubsetTag::LongText);
    CHECK(rep.count == 0);
    CHECK(rep.per_subset_ap50.empty());
    const std::string j = rep.to_json(false);
    CHECK(j.find("long_text") == std::string::npos);
    CHECK(rep.table().find("-") != std::string::npos);
}

TEST_CASE("evaluate is deterministic across runs and thread counts") {
    Dataset ds = tiny_dataset(32);
    ModelState m = ModelState::init(tiny_eval_config(), 9);
    MetricsReport a = evaluate(m, ds, Split::None, std::nullopt, 1);
    MetricsReport b = evaluate(m, ds, Split::None, std::nullopt, 2);
    CHECK(a.to_json(false) == b.to_json(false));
    CHECK(a.count == 32);
    CHECK(a.mean_iou >= 0.0);
    CHECK(a.overall_ap50 >= 0.0);
    CHECK(a.overall_ap50 <= 1.0);
}

TEST_CASE("attention dump shapes and normalization") {
    Dataset ds = tiny_dataset(4);
    ModelState m = ModelState::init(tiny_eval_config(), 13);
    const auto& s = ds.samples[0];
    AttentionDump dump = dump_layer_attention(m, s.scene, s.command, Vocabulary::builtin());

    const size_t n = s.scene.regions.size();
    const size_t layers = m.cfg.decoder_layers + 1;
    REQUIRE(dump.layer_weights.size() == n);
    for (const auto& row : dump.layer_weights) {
        REQUIRE(row.size() == layers);
        double total = 0;
        for (double v : row) total += v;
        CHECK(std::abs(total - 1.0) < 1e-6);
    }
    for (const auto& head : dump.cross_modal)
        for (const auto& row : head) {
            double total = 0;
            for (double v : row) total += v;
            CHECK(std::abs(total - 1.0) < 1e-6);
        }

    // two-group summary: 2 rows x (m+1) columns; flat table has 2*(m+1) rows
    REQUIRE(dump.group_mean.size() == 2);
    CHECK(dump.group_mean[0].size() == layers);
    const std::string table = dump.plot_table();
    size_t lines = 0;
    for (char c : table) lines += c == '\n';
    CHECK(lines == 1 + 2 * layers);  // header + rows
    CHECK(dump.region_labels.size() == n);
}
