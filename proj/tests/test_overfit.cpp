#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vground/config.hpp"
#include "vground/pipeline.hpp"
#include "vground/trainer.hpp"

using namespace vground;

namespace {

// One shared overfit run: desk-scale model on a small planted set, trained
// until the train split is essentially memorized. Cached across the tests
// below because training is the expensive part.
struct OverfitFixture {
    Dataset ds;
    TrainOutcome outcome;
};

const OverfitFixture& overfit_fixture() {
    static const OverfitFixture fx = [] {
        OverfitFixture f;
        GenParams params;  // desk defaults: 8 regions, d_vision 64, 4x4 patches
        f.ds = generate_dataset(123, 16, params, Vocabulary::builtin());
        Config cfg;
        cfg.train.batch_size = 8;
        cfg.train.max_steps = 400;
        cfg.train.early_stop_ap50 = 0.95;
        cfg.train.seed = 3;
        f.outcome = train(cfg, f.ds, Vocabulary::builtin());
        return f;
    }();
    return fx;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b, size_t lo, size_t n) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < n; ++i) {
        dot += a[lo + i] * b[i];
        na += a[lo + i] * a[lo + i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("overfit run memorizes the planted correspondence") {
    const auto& fx = overfit_fixture();
    CHECK(fx.outcome.final_train_ap50 >= 0.9);
    CHECK(fx.outcome.steps <= 400);
}

TEST_CASE("trained emotion embeddings stay separated") {
    const auto& fx = overfit_fixture();
    ModelState model = fx.outcome.final_model;
    const auto& table = model.emotion_embed.data();
    const size_t d = model.cfg.d;
    for (size_t a = 0; a < 3; ++a)
        for (size_t b = a + 1; b < 3; ++b) {
            std::vector<double> row_b(table.begin() + static_cast<long>(b * d),
                                      table.begin() + static_cast<long>((b + 1) * d));
            CHECK(cosine(table, row_b, a * d, d) < 0.99);
        }
}

TEST_CASE("duplicating the target region puts the pair in the top-2 ranks") {
    const auto& fx = overfit_fixture();
    ModelState model = fx.outcome.final_model;
    size_t checked = 0, both_on_top = 0;
    for (const auto& sample : fx.ds.samples) {
        Prediction base = predict(model, sample.scene, sample.command, 1);
        if (base.ranked_regions[0] != sample.target_index) continue;  // memorized scenes only
        Scene twin = sample.scene;
        twin.regions.push_back(twin.regions[sample.target_index]);
        Prediction p = predict(model, twin, sample.command, 2);
        const size_t dup_index = twin.regions.size() - 1;
        const bool top2_is_pair =
            (p.top_k[0] == sample.target_index && p.top_k[1] == dup_index) ||
            (p.top_k[0] == dup_index && p.top_k[1] == sample.target_index);
        both_on_top += top2_is_pair ? 1 : 0;
        ++checked;
    }
    REQUIRE(checked > 0);
    CHECK(both_on_top == checked);  // identical features, box, and l_q row -> tie at the top
}

TEST_CASE("converged layer-attention weights do not collapse onto the top layer") {
    const auto& fx = overfit_fixture();
    ModelState model = fx.outcome.final_model;
    const size_t layers = model.cfg.decoder_layers + 1;
    double top = 0;
    size_t rows = 0;
    for (const auto& sample : fx.ds.samples) {
        AttentionDump dump =
            dump_layer_attention(model, sample.scene, sample.command, Vocabulary::builtin());
        for (const auto& row : dump.layer_weights) {
            top += row[layers - 1];
            ++rows;
        }
    }
    CHECK(top / static_cast<double>(rows) < 0.9);
}
