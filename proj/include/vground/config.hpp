#pragma once

#include <string>

#include "vground/model.hpp"

namespace vground {

// Flat dotted-key plain-text run configuration ("model.d=64", one per line,
// '#' comments). Flags override file values; the effective config is always
// snapshotted next to the run artifacts.
struct Config {
    ModelConfig model;

    struct {
        size_t epochs = 250;
        size_t batch_size = 16;
        double lr = 1e-3;
        uint64_t seed = 1;
        double fraction = 1.0;   // training-split subsample; val/test untouched
        size_t max_steps = 500;  // 0 = unlimited
        double clip_norm = 5.0;  // 0 = no clipping
        bool eval_train = true;
        double early_stop_ap50 = 0.95;  // 0 = off; checked at epoch end
    } train;

    struct {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.01;
    } optim;

    struct {
        size_t t0 = 0;  // 0 = one epoch of steps
        size_t t_mult = 2;
        double lr_min = 0.0;
    } sched;

    struct {
        std::string mode = "rule";  // rule | external
        std::string url;
        int timeout_ms = 2000;
        bool freeze_embed = false;
    } emotion;

    struct {
        double train_frac = 1.0;
        double val_frac = 0.0;
        double test_frac = 0.0;
        uint64_t split_seed = 7;
        std::string vocab_file;  // empty = builtin vocabulary
    } data;

    static Config parse(const std::string& text);
    std::string serialize() const;
    void set_key(const std::string& key, const std::string& value);
    void validate() const;
};

}  // namespace vground
