#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "helpers.hpp"
#include "vground/data.hpp"
#include "vground/error.hpp"
#include "vground/util.hpp"

using namespace vground;
using nlohmann::json;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

GenParams small_params() {
    GenParams p;
    p.n_regions = 8;
    p.colors = 3;
    p.kinds = 3;
    p.feature_width = 16;
    p.patch_width = 10;
    p.patch_grid = 2;
    return p;
}

// Recover a region's attribute triple from its one-hot feature blocks.
std::tuple<size_t, size_t, size_t> attrs_of(const RegionProposal& r, const GenParams& p) {
    auto argmax = [&](size_t lo, size_t n) {
        size_t best = 0;
        for (size_t i = 1; i < n; ++i)
            if (r.features[lo + i] > r.features[lo + best]) best = i;
        return best;
    };
    return {argmax(0, p.colors), argmax(p.colors, p.kinds), argmax(p.colors + p.kinds, 3)};
}

}  // namespace

TEST_CASE("generator determinism: equal seed and params give byte-equal datasets") {
    const auto& vocab = Vocabulary::builtin();
    Dataset a = generate_dataset(7, 16, small_params(), vocab);
    Dataset b = generate_dataset(7, 16, small_params(), vocab);
    const std::string pa = tmp_path("vg_ds_a.json"), pb = tmp_path("vg_ds_b.json");
    save_dataset(a, pa);
    save_dataset(b, pb);
    CHECK(read_file(pa) == read_file(pb));
    Dataset c = generate_dataset(8, 16, small_params(), vocab);
    save_dataset(c, pb);
    CHECK(read_file(pa) != read_file(pb));
    std::remove(pa.c_str());
    std::remove(pb.c_str());
}

TEST_CASE("planted uniqueness: exactly one region matches the commanded triple") {
    const auto& vocab = Vocabulary::builtin();
    GenParams p = small_params();
    for (uint64_t seed = 0; seed < 50; ++seed) {
        SceneSample s = generate_synthetic_scene(seed, p, vocab);
        REQUIRE(s.target_index < s.scene.regions.size());
        const auto target = attrs_of(s.scene.regions[s.target_index], p);
        size_t matches = 0;
        std::set<std::tuple<size_t, size_t, size_t>> tuples;
        for (const auto& r : s.scene.regions) {
            const auto a = attrs_of(r, p);
            tuples.insert(a);
            if (a == target) ++matches;
        }
        CHECK(matches == 1);
        CHECK(tuples.size() == s.scene.regions.size());  // non-identical attribute tuples
        // synthetic gt box equals the target region box
        CHECK(s.scene.gt_box.x1 == s.scene.regions[s.target_index].box.x1);
        CHECK(s.scene.gt_box.y2 == s.scene.regions[s.target_index].box.y2);
    }
}

TEST_CASE("too-small attribute alphabet is a generation error") {
    GenParams p = small_params();
    p.n_regions = 28;  // 3*3*3 = 27 possible tuples
    CHECK_THROWS_AS(generate_synthetic_scene(1, p, Vocabulary::builtin()), ValidationError);
}

TEST_CASE("emotion templates produce all three categories") {
    const auto& vocab = Vocabulary::builtin();
    GenParams p = small_params();
    p.emotion_templates = true;
    std::set<EmotionCategory> seen;
    for (uint64_t seed = 0; seed < 40; ++seed) {
        SceneSample s = generate_synthetic_scene(seed, p, vocab);
        seen.insert(s.command.emotion);
        CHECK(classify_emotion_rule(s.command.raw_text) == s.command.emotion);
        if (s.command.raw_text.rfind("Hurry!", 0) == 0)
            CHECK(s.command.emotion == EmotionCategory::Urgent);
    }
    CHECK(seen.size() == 3);
}

TEST_CASE("long-text padding pushes word counts past 23") {
    const auto& vocab = Vocabulary::builtin();
    GenParams p = small_params();
    p.long_text_rate = 1.0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        SceneSample s = generate_synthetic_scene(seed, p, vocab);
        CHECK(s.command.word_count > 23);
        CHECK(word_count(s.command.raw_text) == s.command.word_count);
    }
}

TEST_CASE("dataset save/load round trip is structurally identity") {
    const auto& vocab = Vocabulary::builtin();
    GenParams p = small_params();
    p.emotion_templates = true;
    p.long_text_rate = 0.3;
    Dataset ds = generate_dataset(21, 12, p, vocab);
    const std::string path = tmp_path("vg_roundtrip.json");
    save_dataset(ds, path);
    Dataset loaded = load_dataset(path, vocab);
    const std::string path2 = tmp_path("vg_roundtrip2.json");
    save_dataset(loaded, path2);
    CHECK(read_file(path) == read_file(path2));
    CHECK(loaded.digest == digest_hex(read_file(path)));
    REQUIRE(loaded.samples.size() == ds.samples.size());
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(loaded.samples[i].scene.id == ds.samples[i].scene.id);
        CHECK(loaded.samples[i].target_index == ds.samples[i].target_index);
        CHECK(loaded.samples[i].command.raw_text == ds.samples[i].command.raw_text);
        CHECK(loaded.samples[i].command.tokens == ds.samples[i].command.tokens);
        CHECK(loaded.samples[i].command.emotion == ds.samples[i].command.emotion);
        CHECK(loaded.samples[i].scene.regions[0].features == ds.samples[i].scene.regions[0].features);
    }
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("loader rejects twenty corruption kinds with scene and field context") {
    const auto& vocab = Vocabulary::builtin();
    Dataset ds = generate_dataset(3, 4, small_params(), vocab);
    const std::string path = tmp_path("vg_corrupt.json");
    save_dataset(ds, path);
    const json base = json::parse(read_file(path));

    using Mutator = std::function<void(json&)>;
    const std::vector<std::pair<const char*, Mutator>> corruptions = {
        {"bad version", [](json& d) { d["version"] = 2; }},
        {"missing version", [](json& d) { d.erase("version"); }},
        {"scenes not array", [](json& d) { d["scenes"] = 5; }},
        {"missing image size", [](json& d) { d["image_w"] = 0; }},
        {"box wrong arity", [](json& d) { d["scenes"][0]["regions"][0]["box"] = {1, 2, 3}; }},
        {"box x1 >= x2",
         [](json& d) {
             auto& b = d["scenes"][0]["regions"][0]["box"];
             b[2] = b[0];
         }},
        {"box y1 >= y2",
         [](json& d) {
             auto& b = d["scenes"][1]["regions"][0]["box"];
             b[3] = double(b[1]) - 1.0;
         }},
        {"box out of bounds", [](json& d) { d["scenes"][0]["regions"][0]["box"][2] = 1e6; }},
        {"missing features", [](json& d) { d["scenes"][0]["regions"][0].erase("features"); }},
        {"empty features", [](json& d) { d["scenes"][0]["regions"][0]["features"] = json::array(); }},
        {"non-numeric feature", [](json& d) { d["scenes"][0]["regions"][0]["features"][0] = "x"; }},
        {"ragged feature width",
         [](json& d) {
             auto& f = d["scenes"][0]["regions"][1]["features"];
             f.erase(f.size() - 1);
         }},
        {"target index out of range", [](json& d) { d["scenes"][0]["target_index"] = 99; }},
        {"negative target index", [](json& d) { d["scenes"][0]["target_index"] = -1; }},
        {"empty command", [](json& d) { d["scenes"][0]["command"]["text"] = ""; }},
        {"missing command", [](json& d) { d["scenes"][0].erase("command"); }},
        {"patch row count", [](json& d) { d["scenes"][0]["patch_grid"]["rows"].erase(0); }},
        {"patch row width",
         [](json& d) {
             auto& r = d["scenes"][0]["patch_grid"]["rows"][0];
             r.erase(r.size() - 1);
         }},
        {"duplicate scene ids", [](json& d) { d["scenes"][1]["id"] = d["scenes"][0]["id"]; }},
        {"synthetic gt_box mismatch", [](json& d) {
             auto& b = d["scenes"][0]["gt_box"];
             b[0] = double(b[0]) + 1.0;
         }},
    };
    CHECK(corruptions.size() == 20);
    for (const auto& [name, mutate] : corruptions) {
        INFO(name);
        json doc = base;
        mutate(doc);
        write_file(path, doc.dump());
        CHECK_THROWS_AS(load_dataset(path, vocab), ValidationError);
    }

    // the error message carries scene index and field path
    json doc = base;
    doc["scenes"][1]["regions"][0]["box"][2] = double(doc["scenes"][1]["regions"][0]["box"][0]);
    write_file(path, doc.dump());
    try {
        load_dataset(path, vocab);
        FAIL("expected schema error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("scene 1") != std::string::npos);
        CHECK(msg.find("box") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("split arithmetic: floor with remainder to test") {
    Dataset ds;
    ds.samples.resize(11959);
    split_dataset(ds, 0.698, 0.097, 0.205, 1);
    size_t tr = ds.indices_of(Split::Train).size();
    size_t va = ds.indices_of(Split::Val).size();
    size_t te = ds.indices_of(Split::Test).size();
    CHECK(tr == 8347);  // floor(0.698 * 11959)
    CHECK(va == 1160);
    CHECK(te == 2452);  // floor + the remainder
    CHECK(tr + va + te == 11959);
}

TEST_CASE("split arithmetic reproduces the benchmark split from exact ratios") {
    Dataset ds;
    ds.samples.resize(11959);
    split_dataset(ds, 8349.0 / 11959.0, 1163.0 / 11959.0, 2447.0 / 11959.0, 2);
    CHECK(ds.indices_of(Split::Train).size() == 8349);
    CHECK(ds.indices_of(Split::Val).size() == 1163);
    CHECK(ds.indices_of(Split::Test).size() == 2447);
}

TEST_CASE("split determinism, partition, and validation") {
    Dataset a;
    a.samples.resize(100);
    split_dataset(a, 0.7, 0.1, 0.2, 42);
    Dataset b;
    b.samples.resize(100);
    split_dataset(b, 0.7, 0.1, 0.2, 42);
    CHECK(a.split == b.split);
    for (Split s : a.split) CHECK(s != Split::None);  // exhaustive when fractions sum to 1

    CHECK_THROWS_AS(split_dataset(a, 0.8, 0.2, 0.2, 1), ValidationError);
    CHECK_THROWS_AS(split_dataset(a, 0.0, 0.5, 0.5, 1), ValidationError);
    CHECK_THROWS_AS(split_dataset(a, 0.5, 0.2, 0.3, 1, 0.0), ValidationError);
}

TEST_CASE("reduced-data training sets nest: 50% within 75% within 100%") {
    auto train_set = [](double reduce) {
        Dataset ds;
        ds.samples.resize(200);
        split_dataset(ds, 0.8, 0.1, 0.1, 5, reduce);
        auto idx = ds.indices_of(Split::Train);
        return std::set<size_t>(idx.begin(), idx.end());
    };
    auto s50 = train_set(0.5);
    auto s75 = train_set(0.75);
    auto s100 = train_set(1.0);
    CHECK(s50.size() == 80);
    CHECK(s75.size() == 120);
    CHECK(s100.size() == 160);
    CHECK(std::includes(s75.begin(), s75.end(), s50.begin(), s50.end()));
    CHECK(std::includes(s100.begin(), s100.end(), s75.begin(), s75.end()));

    // dropped training scenes stay out of val/test
    Dataset ds;
    ds.samples.resize(200);
    split_dataset(ds, 0.8, 0.1, 0.1, 5, 0.5);
    CHECK(ds.indices_of(Split::Val).size() == 20);
    CHECK(ds.indices_of(Split::Test).size() == 20);
}

TEST_CASE("subset tagging boundaries and co-occurrence") {
    Dataset ds;
    auto add = [&](size_t words, bool low_light, int agents, bool ambiguous) {
        SceneSample s;
        s.command.word_count = words;
        s.scene.meta.low_light = low_light;
        s.scene.meta.agent_count = agents;
        s.scene.meta.ambiguous = ambiguous;
        ds.samples.push_back(std::move(s));
    };
    add(24, false, 0, false);  // long text, strictly more than 23
    add(23, false, 0, false);  // not long text
    add(5, true, 6, false);    // restricted + multi-agent co-occur
    add(5, false, 5, true);    // ambiguous only
    add(5, false, 0, false);   // normal

    auto tags = tag_subsets(ds);
    CHECK(has_tag(tags[0], SubsetTag::LongText));
    CHECK(!has_tag(tags[1], SubsetTag::LongText));
    CHECK(has_tag(tags[1], SubsetTag::Normal));
    CHECK(has_tag(tags[2], SubsetTag::Restricted));
    CHECK(has_tag(tags[2], SubsetTag::MultiAgent));
    CHECK(!has_tag(tags[2], SubsetTag::Normal));
    CHECK(has_tag(tags[3], SubsetTag::AmbiguousCommand));
    CHECK(has_tag(tags[4], SubsetTag::Normal));
    CHECK(tags[4].size() == 1);
}

TEST_CASE("subset display names match the reporting categories") {
    CHECK(std::string(subset_name(SubsetTag::Normal)) == "Normal");
    CHECK(std::string(subset_name(SubsetTag::Restricted)) == "Restricted");
    CHECK(std::string(subset_name(SubsetTag::MultiAgent)) == "Multi-agent");
    CHECK(std::string(subset_name(SubsetTag::AmbiguousCommand)) == "Ambiguous Command");
    CHECK(std::string(subset_name(SubsetTag::LongText)) == "Long-text");
}

TEST_CASE("generator meta flags drive the corner-case subsets") {
    const auto& vocab = Vocabulary::builtin();
    GenParams p = small_params();
    p.kinds = 6;
    p.patch_width = 12;
    size_t low = 0, multi = 0, amb = 0;
    for (uint64_t seed = 100; seed < 200; ++seed) {
        SceneSample s = generate_synthetic_scene(seed, p, vocab);
        low += s.scene.meta.low_light;
        multi += s.scene.meta.agent_count >= 6;
        amb += s.scene.meta.ambiguous;
    }
    CHECK(low > 0);
    CHECK(multi > 0);
    CHECK(amb > 0);
}
