#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vground/emotion.hpp"
#include "vground/text.hpp"

namespace vground {

struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    bool valid() const { return x1 < x2 && y1 < y2; }
    double area() const { return (x2 - x1) * (y2 - y1); }
};

struct RegionProposal {
    Box box;
    std::vector<double> features;
};

struct SceneMeta {
    bool low_light = false;
    int agent_count = 0;
    bool ambiguous = false;
};

// An image reduced to features: a P x P grid of patch vectors plus N region
// proposals, with one ground-truth box.
struct Scene {
    std::string id;
    double image_w = 0, image_h = 0;
    size_t patch_grid = 0;   // P
    size_t patch_width = 0;  // width of each patch feature vector
    std::vector<std::vector<double>> patches;  // P*P rows, row-major over the grid
    std::vector<RegionProposal> regions;
    Box gt_box;
    SceneMeta meta;
};

struct Command {
    std::string raw_text;
    std::vector<int> tokens;
    size_t word_count = 0;
    EmotionCategory emotion = EmotionCategory::Informative;
};

Command make_command(const std::string& text, const Vocabulary& vocab, size_t max_tokens,
                     const EmotionClassifier& classifier = EmotionClassifier());

struct SceneSample {
    Scene scene;
    Command command;
    size_t target_index = 0;
};

enum class Split { None = 0, Train = 1, Val = 2, Test = 3 };

struct Dataset {
    std::vector<SceneSample> samples;
    std::vector<Split> split;  // parallel to samples; empty until split_dataset
    std::string provenance;    // generator params or source digest, JSON text
    std::string digest;        // digest of the file this dataset was loaded from

    std::vector<size_t> indices_of(Split s) const;
};

enum class SubsetTag { Normal = 0, LongText = 1, Restricted = 2, MultiAgent = 3, AmbiguousCommand = 4 };

const char* subset_name(SubsetTag t);  // Table-style display names
const char* subset_key(SubsetTag t);   // snake_case serialization keys

struct GenParams {
    size_t n_regions = 8;
    size_t patch_grid = 4;
    size_t patch_width = 16;
    size_t feature_width = 64;  // must match the model's d_vision at train time
    size_t colors = 3;
    size_t kinds = 6;
    double image_w = 256;
    double image_h = 256;
    // Probability that a distractor shares the target's color+kind (differing
    // only in zone), which makes the scene an ambiguous-command sample.
    double overlap_rate = 0.25;
    bool emotion_templates = false;  // wrap commands in urgent/informative styles
    double long_text_rate = 0.15;    // probability of padding a command past 23 words
    size_t max_tokens = 60;

    void validate() const;
};

// Deterministic scene with a planted command->region correspondence: exactly
// one region matches the command's (color, kind, zone) triple.
SceneSample generate_synthetic_scene(uint64_t seed, const GenParams& params, const Vocabulary& vocab);

Dataset generate_dataset(uint64_t seed, size_t count, const GenParams& params, const Vocabulary& vocab);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path, const Vocabulary& vocab, size_t max_tokens = 60);

// Seeded shuffle then contiguous train/val/test assignment. Fraction products
// within 1e-6 of an integer snap to it; otherwise sizes floor and the
// remainder goes to the test split. reduce_train < 1 subsamples only the
// training split (a prefix of the shuffled order, so reduced sets nest).
void split_dataset(Dataset& ds, double train_frac, double val_frac, double test_frac, uint64_t seed,
                   double reduce_train = 1.0);

std::vector<std::vector<SubsetTag>> tag_subsets(const Dataset& ds);
bool has_tag(const std::vector<SubsetTag>& tags, SubsetTag t);

}  // namespace vground
