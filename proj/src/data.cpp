#include "vground/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vground/error.hpp"
#include "vground/metrics.hpp"
#include "vground/rng.hpp"
#include "vground/util.hpp"

namespace vground {

using nlohmann::json;

namespace {

const std::vector<std::string>& color_names() {
    static const std::vector<std::string> v = {"red", "blue", "green", "white", "black", "yellow"};
    return v;
}

const std::vector<std::string>& kind_names() {
    static const std::vector<std::string> v = {"car", "truck", "bus", "van", "sign", "shelter"};
    return v;
}

constexpr size_t kAgentKinds = 4;  // car, truck, bus, van count as moving agents
constexpr size_t kZones = 3;

const char* zone_phrase(size_t z) {
    switch (z) {
        case 0: return "on the left";
        case 1: return "in the middle";
        default: return "on the right";
    }
}

struct Attr {
    size_t color, kind, zone;
    bool operator<(const Attr& o) const {
        return std::tie(color, kind, zone) < std::tie(o.color, o.kind, o.zone);
    }
    bool operator==(const Attr& o) const {
        return color == o.color && kind == o.kind && zone == o.zone;
    }
};

double overlap_1d(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

double box_patch_overlap(const Box& b, double px0, double py0, double px1, double py1) {
    const double inter = overlap_1d(b.x1, b.x2, px0, px1) * overlap_1d(b.y1, b.y2, py0, py1);
    return inter / ((px1 - px0) * (py1 - py0));
}

}  // namespace

const char* subset_name(SubsetTag t) {
    switch (t) {
        case SubsetTag::Normal: return "Normal";
        case SubsetTag::LongText: return "Long-text";
        case SubsetTag::Restricted: return "Restricted";
        case SubsetTag::MultiAgent: return "Multi-agent";
        case SubsetTag::AmbiguousCommand: return "Ambiguous Command";
    }
    return "Normal";
}

const char* subset_key(SubsetTag t) {
    switch (t) {
        case SubsetTag::Normal: return "normal";
        case SubsetTag::LongText: return "long_text";
        case SubsetTag::Restricted: return "restricted";
        case SubsetTag::MultiAgent: return "multi_agent";
        case SubsetTag::AmbiguousCommand: return "ambiguous_command";
    }
    return "normal";
}

std::vector<size_t> Dataset::indices_of(Split s) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < samples.size(); ++i)
        if (i < split.size() && split[i] == s) out.push_back(i);
    return out;
}

Command make_command(const std::string& text, const Vocabulary& vocab, size_t max_tokens,
                     const EmotionClassifier& classifier) {
    Command c;
    c.raw_text = text;
    c.tokens = tokenize(text, vocab, max_tokens).ids;
    c.word_count = word_count(text);
    c.emotion = classifier.classify(text);
    return c;
}

void GenParams::validate() const {
    if (n_regions < 1) throw ValidationError("gen: n_regions must be >= 1");
    if (colors < 1 || colors > color_names().size())
        throw ValidationError("gen: colors must be in [1, " + std::to_string(color_names().size()) + "]");
    if (kinds < 1 || kinds > kind_names().size())
        throw ValidationError("gen: kinds must be in [1, " + std::to_string(kind_names().size()) + "]");
    if (n_regions > colors * kinds * kZones)
        throw ValidationError("gen: attribute alphabet too small to keep the target unique (" +
                              std::to_string(colors * kinds * kZones) + " tuples < " +
                              std::to_string(n_regions) + " regions)");
    if (patch_grid < 1) throw ValidationError("gen: patch_grid must be >= 1");
    if (patch_width < 2 + colors + kinds)
        throw ValidationError("gen: patch_width must be >= " + std::to_string(2 + colors + kinds));
    if (feature_width < colors + kinds + kZones + 4)
        throw ValidationError("gen: feature_width must be >= " +
                              std::to_string(colors + kinds + kZones + 4));
    if (image_w <= 0 || image_h <= 0) throw ValidationError("gen: image dimensions must be positive");
    if (overlap_rate < 0 || overlap_rate > 1) throw ValidationError("gen: overlap_rate must be in [0,1]");
    if (long_text_rate < 0 || long_text_rate > 1)
        throw ValidationError("gen: long_text_rate must be in [0,1]");
    if (max_tokens < 8) throw ValidationError("gen: max_tokens must be >= 8");
}

SceneSample generate_synthetic_scene(uint64_t seed, const GenParams& params, const Vocabulary& vocab) {
    params.validate();
    Rng base(seed);
    Rng attr_rng = base.split(1);
    Rng box_rng = base.split(2);
    Rng noise_rng = base.split(3);
    Rng text_rng = base.split(4);

    const size_t n = params.n_regions;

    // Distinct attribute tuples; the target's full triple is unique by
    // construction. An overlap distractor shares color+kind in another zone.
    Attr target{static_cast<size_t>(attr_rng.uniform_int(0, static_cast<int64_t>(params.colors) - 1)),
                static_cast<size_t>(attr_rng.uniform_int(0, static_cast<int64_t>(params.kinds) - 1)),
                static_cast<size_t>(attr_rng.uniform_int(0, kZones - 1))};
    std::set<Attr> used{target};
    std::vector<Attr> attrs{target};
    const bool plant_overlap = n > 1 && attr_rng.uniform() < params.overlap_rate;
    if (plant_overlap) {
        Attr twin = target;
        twin.zone = (target.zone + 1 + static_cast<size_t>(attr_rng.uniform_int(0, 1))) % kZones;
        if (used.insert(twin).second) attrs.push_back(twin);
    }
    while (attrs.size() < n) {
        Attr a{static_cast<size_t>(attr_rng.uniform_int(0, static_cast<int64_t>(params.colors) - 1)),
               static_cast<size_t>(attr_rng.uniform_int(0, static_cast<int64_t>(params.kinds) - 1)),
               static_cast<size_t>(attr_rng.uniform_int(0, kZones - 1))};
        if (used.insert(a).second) attrs.push_back(a);
    }
    // Shuffle so the target lands at a uniform index.
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    attr_rng.shuffle(order);
    size_t target_index = 0;
    for (size_t i = 0; i < n; ++i)
        if (order[i] == 0) target_index = i;

    Scene scene;
    scene.id = "scene-" + std::to_string(seed);
    scene.image_w = params.image_w;
    scene.image_h = params.image_h;
    scene.patch_grid = params.patch_grid;
    scene.patch_width = params.patch_width;
    scene.regions.resize(n);

    const double zone_w = params.image_w / static_cast<double>(kZones);
    auto sample_box = [&](size_t zone) {
        const double w = box_rng.uniform(0.12, 0.26) * params.image_w;
        const double h = box_rng.uniform(0.12, 0.26) * params.image_h;
        const double bw = std::min(w, zone_w - 2.0);
        const double zx0 = static_cast<double>(zone) * zone_w;
        const double x1 = box_rng.uniform(zx0, zx0 + zone_w - bw);
        const double y1 = box_rng.uniform(0.0, params.image_h - h);
        return Box{x1, y1, x1 + bw, y1 + h};
    };

    // Target box first so distractors can be kept clear of it.
    Box target_box = sample_box(target.zone);
    for (size_t i = 0; i < n; ++i) {
        const Attr& a = attrs[order[i]];
        if (i == target_index) {
            scene.regions[i].box = target_box;
            continue;
        }
        Box b = sample_box(a.zone);
        for (int tries = 0; tries < 64 && iou(b, target_box) >= 0.3; ++tries) b = sample_box(a.zone);
        scene.regions[i].box = b;
    }
    scene.gt_box = target_box;

    // Region features: one-hot attribute blocks, normalized geometry, noise.
    for (size_t i = 0; i < n; ++i) {
        const Attr& a = attrs[order[i]];
        const Box& b = scene.regions[i].box;
        auto& f = scene.regions[i].features;
        f.assign(params.feature_width, 0.0);
        f[a.color] = 1.0;
        f[params.colors + a.kind] = 1.0;
        f[params.colors + params.kinds + a.zone] = 1.0;
        const size_t g = params.colors + params.kinds + kZones;
        f[g + 0] = 0.5 * (b.x1 + b.x2) / params.image_w;
        f[g + 1] = 0.5 * (b.y1 + b.y2) / params.image_h;
        f[g + 2] = (b.x2 - b.x1) / params.image_w;
        f[g + 3] = (b.y2 - b.y1) / params.image_h;
        for (size_t j = 0; j < params.feature_width; ++j)
            f[j] += (j < g + 4 ? 0.02 : 0.05) * noise_rng.normal();
    }

    // Patch grid: brightness plus per-color/per-kind box occupancy.
    const double brightness = noise_rng.uniform(0.05, 1.0);
    const size_t p = params.patch_grid;
    scene.patches.assign(p * p, std::vector<double>(params.patch_width, 0.0));
    for (size_t py = 0; py < p; ++py) {
        for (size_t px = 0; px < p; ++px) {
            auto& row = scene.patches[py * p + px];
            const double x0 = params.image_w * static_cast<double>(px) / static_cast<double>(p);
            const double x1 = params.image_w * static_cast<double>(px + 1) / static_cast<double>(p);
            const double y0 = params.image_h * static_cast<double>(py) / static_cast<double>(p);
            const double y1 = params.image_h * static_cast<double>(py + 1) / static_cast<double>(p);
            double total = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double o = box_patch_overlap(scene.regions[i].box, x0, y0, x1, y1);
                total += o;
                const Attr& a = attrs[order[i]];
                row[2 + a.color] = std::min(1.0, row[2 + a.color] + o);
                row[2 + params.colors + a.kind] = std::min(1.0, row[2 + params.colors + a.kind] + o);
            }
            row[0] = brightness + 0.01 * noise_rng.normal();
            row[1] = std::min(1.0, total);
            for (size_t j = 2 + params.colors + params.kinds; j < params.patch_width; ++j)
                row[j] = 0.05 * noise_rng.normal();
        }
    }

    scene.meta.low_light = brightness < 0.3;
    int agents = 0;
    for (size_t i = 0; i < n; ++i)
        if (attrs[order[i]].kind < std::min(kAgentKinds, params.kinds)) ++agents;
    scene.meta.agent_count = agents;
    int twins = 0;
    for (size_t i = 0; i < n; ++i)
        if (attrs[order[i]].color == target.color && attrs[order[i]].kind == target.kind) ++twins;
    scene.meta.ambiguous = twins >= 2;

    // Command text referring uniquely to the target's attribute triple.
    static const std::vector<std::string> verbs = {"Park behind", "Pull up to",    "Drive to",
                                                   "Drop me off by", "Follow",      "Pass"};
    static const std::vector<std::string> urgent_prefixes = {"Hurry!", "Quick!", "Hold on!"};
    static const std::vector<std::string> fillers = {
        "the one that we talked about earlier while heading over from the station across town",
        "just past the crossing where several people stood earlier this evening",
        "a little ahead of the place we passed on the road before",
    };
    const std::string subject = color_names()[target.color] + " " + kind_names()[target.kind] + " " +
                                zone_phrase(target.zone);
    int style = 1;  // commanding by default
    if (params.emotion_templates) style = static_cast<int>(text_rng.uniform_int(0, 2));
    const std::string verb = verbs[static_cast<size_t>(text_rng.uniform_int(
        0, static_cast<int64_t>(verbs.size()) - 1))];
    std::string text;
    switch (style) {
        case 0:
            text = urgent_prefixes[static_cast<size_t>(text_rng.uniform_int(
                       0, static_cast<int64_t>(urgent_prefixes.size()) - 1))] +
                   " " + verb + " the " + subject;
            break;
        case 2: {
            const int v = static_cast<int>(text_rng.uniform_int(0, 2));
            if (v == 0)
                text = "The " + subject + " is the destination";
            else if (v == 1)
                text = "The destination is the " + subject;
            else
                text = "There is a " + subject + " where we should be";
            break;
        }
        default:
            text = verb + " the " + subject;
            break;
    }
    if (text_rng.uniform() < params.long_text_rate) {
        size_t fi = static_cast<size_t>(text_rng.uniform_int(0, static_cast<int64_t>(fillers.size()) - 1));
        while (word_count(text) <= 23) {
            text += " , " + fillers[fi];
            fi = (fi + 1) % fillers.size();
        }
    }
    text += " .";

    SceneSample sample;
    sample.scene = std::move(scene);
    sample.command = make_command(text, vocab, params.max_tokens);
    sample.target_index = target_index;
    return sample;
}

Dataset generate_dataset(uint64_t seed, size_t count, const GenParams& params, const Vocabulary& vocab) {
    if (count < 1) throw ValidationError("gen: count must be >= 1");
    params.validate();
    Dataset ds;
    ds.samples.reserve(count);
    Rng base(seed);
    for (size_t i = 0; i < count; ++i) {
        uint64_t scene_seed = base.derive(i);
        SceneSample s = generate_synthetic_scene(scene_seed, params, vocab);
        char buf[24];
        std::snprintf(buf, sizeof(buf), "s%06zu", i);
        s.scene.id = buf;
        ds.samples.push_back(std::move(s));
    }
    json prov = {
        {"kind", "synthetic"},
        {"seed", seed},
        {"count", count},
        {"params",
         {{"n_regions", params.n_regions},
          {"patch_grid", params.patch_grid},
          {"patch_width", params.patch_width},
          {"feature_width", params.feature_width},
          {"colors", params.colors},
          {"kinds", params.kinds},
          {"image_w", params.image_w},
          {"image_h", params.image_h},
          {"overlap_rate", params.overlap_rate},
          {"emotion_templates", params.emotion_templates},
          {"long_text_rate", params.long_text_rate},
          {"max_tokens", params.max_tokens}}},
    };
    ds.provenance = prov.dump();
    return ds;
}

// ---------------------------------------------------------------------------
// dataset file format
// ---------------------------------------------------------------------------

void save_dataset(const Dataset& ds, const std::string& path) {
    json doc;
    doc["version"] = 1;
    doc["provenance"] = ds.provenance.empty() ? json::object() : json::parse(ds.provenance);
    double iw = 0, ih = 0;
    if (!ds.samples.empty()) {
        iw = ds.samples[0].scene.image_w;
        ih = ds.samples[0].scene.image_h;
    }
    doc["image_w"] = iw;
    doc["image_h"] = ih;
    json scenes = json::array();
    for (const auto& s : ds.samples) {
        json sc;
        sc["id"] = s.scene.id;
        sc["patch_grid"] = {{"p", s.scene.patch_grid},
                            {"width", s.scene.patch_width},
                            {"rows", s.scene.patches}};
        json regions = json::array();
        for (const auto& r : s.scene.regions) {
            regions.push_back({{"box", {r.box.x1, r.box.y1, r.box.x2, r.box.y2}},
                               {"features", r.features}});
        }
        sc["regions"] = std::move(regions);
        sc["command"] = {{"text", s.command.raw_text}};
        sc["gt_box"] = {s.scene.gt_box.x1, s.scene.gt_box.y1, s.scene.gt_box.x2, s.scene.gt_box.y2};
        sc["target_index"] = s.target_index;
        sc["meta"] = {{"low_light", s.scene.meta.low_light},
                      {"agent_count", s.scene.meta.agent_count},
                      {"ambiguous", s.scene.meta.ambiguous}};
        scenes.push_back(std::move(sc));
    }
    doc["scenes"] = std::move(scenes);
    write_file(path, doc.dump(2) + "\n");
}

namespace {

[[noreturn]] void schema_error(size_t scene_index, const std::string& field, const std::string& why) {
    throw ValidationError("dataset schema violation at scene " + std::to_string(scene_index) +
                          ", field " + field + ": " + why);
}

Box parse_box(const json& j, size_t idx, const std::string& field, double iw, double ih) {
    if (!j.is_array() || j.size() != 4) schema_error(idx, field, "expected [x1,y1,x2,y2]");
    for (const auto& v : j)
        if (!v.is_number()) schema_error(idx, field, "non-numeric coordinate");
    Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    for (double v : {b.x1, b.y1, b.x2, b.y2})
        if (!std::isfinite(v)) schema_error(idx, field, "non-finite coordinate");
    if (!(b.x1 < b.x2)) schema_error(idx, field, "requires x1 < x2");
    if (!(b.y1 < b.y2)) schema_error(idx, field, "requires y1 < y2");
    if (b.x1 < 0 || b.y1 < 0 || b.x2 > iw || b.y2 > ih) schema_error(idx, field, "box outside image bounds");
    return b;
}

}  // namespace

Dataset load_dataset(const std::string& path, const Vocabulary& vocab, size_t max_tokens) {
    const std::string bytes = read_file(path);
    json doc = json::parse(bytes, nullptr, false);
    if (doc.is_discarded()) throw ValidationError("dataset file is not valid JSON: " + path);
    if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"] != 1)
        throw ValidationError("dataset: unsupported or missing version");
    if (!doc.contains("scenes") || !doc["scenes"].is_array())
        throw ValidationError("dataset: missing scenes array");
    const double iw = doc.value("image_w", 0.0);
    const double ih = doc.value("image_h", 0.0);
    if (!(iw > 0) || !(ih > 0)) throw ValidationError("dataset: image_w/image_h must be positive");

    const bool synthetic =
        doc.contains("provenance") && doc["provenance"].value("kind", std::string()) == "synthetic";

    Dataset ds;
    ds.provenance = doc.contains("provenance") ? doc["provenance"].dump() : "{}";
    ds.digest = digest_hex(bytes);

    std::set<std::string> ids;
    size_t feature_width = 0, patch_grid = 0, patch_width = 0;
    size_t idx = 0;
    for (const auto& sc : doc["scenes"]) {
        SceneSample sample;
        Scene& scene = sample.scene;
        scene.image_w = iw;
        scene.image_h = ih;
        if (!sc.contains("id") || !sc["id"].is_string()) schema_error(idx, "id", "missing string id");
        scene.id = sc["id"].get<std::string>();
        if (!ids.insert(scene.id).second) schema_error(idx, "id", "duplicate id " + scene.id);

        if (!sc.contains("patch_grid") || !sc["patch_grid"].is_object())
            schema_error(idx, "patch_grid", "missing object");
        const auto& pg = sc["patch_grid"];
        scene.patch_grid = pg.value("p", size_t(0));
        scene.patch_width = pg.value("width", size_t(0));
        if (scene.patch_grid < 1) schema_error(idx, "patch_grid.p", "must be >= 1");
        if (scene.patch_width < 1) schema_error(idx, "patch_grid.width", "must be >= 1");
        if (!pg.contains("rows") || !pg["rows"].is_array() ||
            pg["rows"].size() != scene.patch_grid * scene.patch_grid)
            schema_error(idx, "patch_grid.rows", "expected p*p rows");
        for (const auto& row : pg["rows"]) {
            if (!row.is_array() || row.size() != scene.patch_width)
                schema_error(idx, "patch_grid.rows", "row width mismatch");
            std::vector<double> r;
            r.reserve(row.size());
            for (const auto& v : row) {
                if (!v.is_number()) schema_error(idx, "patch_grid.rows", "non-numeric value");
                const double d = v.get<double>();
                if (!std::isfinite(d)) schema_error(idx, "patch_grid.rows", "non-finite value");
                r.push_back(d);
            }
            scene.patches.push_back(std::move(r));
        }

        if (!sc.contains("regions") || !sc["regions"].is_array() || sc["regions"].empty())
            schema_error(idx, "regions", "missing or empty regions");
        size_t ri = 0;
        for (const auto& rj : sc["regions"]) {
            RegionProposal rp;
            if (!rj.contains("box")) schema_error(idx, "regions[" + std::to_string(ri) + "].box", "missing");
            rp.box = parse_box(rj["box"], idx, "regions[" + std::to_string(ri) + "].box", iw, ih);
            if (!rj.contains("features") || !rj["features"].is_array() || rj["features"].empty())
                schema_error(idx, "regions[" + std::to_string(ri) + "].features", "missing features vector");
            for (const auto& v : rj["features"]) {
                if (!v.is_number())
                    schema_error(idx, "regions[" + std::to_string(ri) + "].features", "non-numeric value");
                const double d = v.get<double>();
                if (!std::isfinite(d))
                    schema_error(idx, "regions[" + std::to_string(ri) + "].features", "non-finite value");
                rp.features.push_back(d);
            }
            if (feature_width == 0) feature_width = rp.features.size();
            if (rp.features.size() != feature_width)
                schema_error(idx, "regions[" + std::to_string(ri) + "].features",
                             "length " + std::to_string(rp.features.size()) +
                                 " differs from dataset feature width " + std::to_string(feature_width));
            scene.regions.push_back(std::move(rp));
            ++ri;
        }
        if (patch_grid == 0) {
            patch_grid = scene.patch_grid;
            patch_width = scene.patch_width;
        }
        if (scene.patch_grid != patch_grid || scene.patch_width != patch_width)
            schema_error(idx, "patch_grid", "inconsistent patch grid across scenes");

        if (!sc.contains("gt_box")) schema_error(idx, "gt_box", "missing");
        scene.gt_box = parse_box(sc["gt_box"], idx, "gt_box", iw, ih);
        if (!sc.contains("target_index") || !sc["target_index"].is_number_unsigned())
            schema_error(idx, "target_index", "missing unsigned integer");
        sample.target_index = sc["target_index"].get<size_t>();
        if (sample.target_index >= scene.regions.size())
            schema_error(idx, "target_index", "out of range");
        if (synthetic) {
            const Box& tb = scene.regions[sample.target_index].box;
            if (tb.x1 != scene.gt_box.x1 || tb.y1 != scene.gt_box.y1 || tb.x2 != scene.gt_box.x2 ||
                tb.y2 != scene.gt_box.y2)
                schema_error(idx, "gt_box", "synthetic gt_box must equal the target region box");
        }

        if (!sc.contains("command") || !sc["command"].is_object() || !sc["command"].contains("text") ||
            !sc["command"]["text"].is_string())
            schema_error(idx, "command.text", "missing string");
        const std::string text = sc["command"]["text"].get<std::string>();
        if (text.empty()) schema_error(idx, "command.text", "empty command");
        sample.command = make_command(text, vocab, max_tokens);

        if (sc.contains("meta")) {
            const auto& mj = sc["meta"];
            if (mj.contains("low_light")) {
                if (!mj["low_light"].is_boolean()) schema_error(idx, "meta.low_light", "expected bool");
                scene.meta.low_light = mj["low_light"].get<bool>();
            }
            if (mj.contains("agent_count")) {
                if (!mj["agent_count"].is_number_integer())
                    schema_error(idx, "meta.agent_count", "expected integer");
                scene.meta.agent_count = mj["agent_count"].get<int>();
                if (scene.meta.agent_count < 0) schema_error(idx, "meta.agent_count", "negative");
            }
            if (mj.contains("ambiguous")) {
                if (!mj["ambiguous"].is_boolean()) schema_error(idx, "meta.ambiguous", "expected bool");
                scene.meta.ambiguous = mj["ambiguous"].get<bool>();
            }
        }

        ds.samples.push_back(std::move(sample));
        ++idx;
    }
    return ds;
}

// ---------------------------------------------------------------------------
// splits and subset tags
// ---------------------------------------------------------------------------

namespace {

size_t split_size(double frac, size_t n) {
    const double x = frac * static_cast<double>(n);
    const double r = std::nearbyint(x);
    if (std::abs(x - r) <= 1e-6 * static_cast<double>(n)) return static_cast<size_t>(r);
    return static_cast<size_t>(std::floor(x));
}

}  // namespace

void split_dataset(Dataset& ds, double train_frac, double val_frac, double test_frac, uint64_t seed,
                   double reduce_train) {
    if (train_frac <= 0 || val_frac < 0 || test_frac < 0)
        throw ValidationError("split: fractions must be positive");
    const double total = train_frac + val_frac + test_frac;
    if (total > 1.0 + 1e-9) throw ValidationError("split: fractions sum exceeds 1");
    if (reduce_train <= 0 || reduce_train > 1.0)
        throw ValidationError("split: reduce_train must be in (0,1]");

    const size_t n = ds.samples.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    size_t n_train = split_size(train_frac, n);
    size_t n_val = split_size(val_frac, n);
    size_t n_test = split_size(test_frac, n);
    while (n_train + n_val + n_test > n) --n_train;  // guard against snap overshoot
    // Remainder scenes from flooring go to the test split when the fractions
    // were meant to cover everything.
    if (std::abs(total - 1.0) <= 1e-9) n_test = n - n_train - n_val;

    ds.split.assign(n, Split::None);
    size_t pos = 0;
    const size_t n_train_kept = std::max<size_t>(
        n_train == 0 ? 0 : 1, static_cast<size_t>(std::floor(static_cast<double>(n_train) * reduce_train)));
    for (size_t i = 0; i < n_train; ++i, ++pos)
        if (i < n_train_kept) ds.split[order[pos]] = Split::Train;
    for (size_t i = 0; i < n_val; ++i, ++pos) ds.split[order[pos]] = Split::Val;
    for (size_t i = 0; i < n_test; ++i, ++pos) ds.split[order[pos]] = Split::Test;
}

bool has_tag(const std::vector<SubsetTag>& tags, SubsetTag t) {
    return std::find(tags.begin(), tags.end(), t) != tags.end();
}

std::vector<std::vector<SubsetTag>> tag_subsets(const Dataset& ds) {
    std::vector<std::vector<SubsetTag>> out;
    out.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        std::vector<SubsetTag> tags;
        if (s.command.word_count > 23) tags.push_back(SubsetTag::LongText);
        if (s.scene.meta.low_light) tags.push_back(SubsetTag::Restricted);
        if (s.scene.meta.agent_count >= 6) tags.push_back(SubsetTag::MultiAgent);
        if (s.scene.meta.ambiguous) tags.push_back(SubsetTag::AmbiguousCommand);
        if (tags.empty()) tags.push_back(SubsetTag::Normal);
        out.push_back(std::move(tags));
    }
    return out;
}

}  // namespace vground
