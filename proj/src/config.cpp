#include "vground/config.hpp"

#include <cstdlib>
#include <sstream>

#include "vground/error.hpp"
#include "vground/util.hpp"

namespace vground {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

size_t parse_u64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        throw ValidationError("config: " + key + " expects an integer, got '" + v + "'");
    return static_cast<size_t>(x);
}

double parse_f64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size())
        throw ValidationError("config: " + key + " expects a number, got '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValidationError("config: " + key + " expects true/false, got '" + v + "'");
}

}  // namespace

void Config::set_key(const std::string& key, const std::string& value) {
    // model
    if (key == "model.d") model.d = parse_u64(key, value);
    else if (key == "model.d_vision") model.d_vision = parse_u64(key, value);
    else if (key == "model.attn_width") model.attn_width = parse_u64(key, value);
    else if (key == "model.cross_heads") model.cross_heads = parse_u64(key, value);
    else if (key == "model.text_layers") model.text_layers = parse_u64(key, value);
    else if (key == "model.text_heads") model.text_heads = parse_u64(key, value);
    else if (key == "model.context_layers") model.context_layers = parse_u64(key, value);
    else if (key == "model.context_heads") model.context_heads = parse_u64(key, value);
    else if (key == "model.decoder_layers") model.decoder_layers = parse_u64(key, value);
    else if (key == "model.decoder_heads") model.decoder_heads = parse_u64(key, value);
    else if (key == "model.patch_grid") model.patch_grid = parse_u64(key, value);
    else if (key == "model.patch_width") model.patch_width = parse_u64(key, value);
    else if (key == "model.vocab_size") model.vocab_size = parse_u64(key, value);
    else if (key == "model.max_tokens") model.max_tokens = parse_u64(key, value);
    else if (key == "model.mlp_ratio") model.mlp_ratio = parse_u64(key, value);
    else if (key == "model.ln_eps") model.ln_eps = parse_f64(key, value);
    else if (key == "model.align_width") model.align_width = parse_u64(key, value);
    else if (key == "model.layer_attn_hidden") model.layer_attn_hidden = parse_u64(key, value);
    else if (key == "model.score_hidden") model.score_hidden = parse_u64(key, value);
    else if (key == "model.qk_swap") model.qk_swap = parse_bool(key, value);
    // train
    else if (key == "train.epochs") train.epochs = parse_u64(key, value);
    else if (key == "train.batch_size") train.batch_size = parse_u64(key, value);
    else if (key == "train.lr") train.lr = parse_f64(key, value);
    else if (key == "train.seed") train.seed = parse_u64(key, value);
    else if (key == "train.fraction") train.fraction = parse_f64(key, value);
    else if (key == "train.max_steps") train.max_steps = parse_u64(key, value);
    else if (key == "train.clip_norm") train.clip_norm = parse_f64(key, value);
    else if (key == "train.eval_train") train.eval_train = parse_bool(key, value);
    else if (key == "train.early_stop_ap50") train.early_stop_ap50 = parse_f64(key, value);
    // optim
    else if (key == "optim.beta1") optim.beta1 = parse_f64(key, value);
    else if (key == "optim.beta2") optim.beta2 = parse_f64(key, value);
    else if (key == "optim.eps") optim.eps = parse_f64(key, value);
    else if (key == "optim.weight_decay") optim.weight_decay = parse_f64(key, value);
    // sched
    else if (key == "sched.t0") sched.t0 = parse_u64(key, value);
    else if (key == "sched.t_mult") sched.t_mult = parse_u64(key, value);
    else if (key == "sched.lr_min") sched.lr_min = parse_f64(key, value);
    // emotion
    else if (key == "emotion.mode") emotion.mode = value;
    else if (key == "emotion.url") emotion.url = value;
    else if (key == "emotion.timeout_ms") emotion.timeout_ms = static_cast<int>(parse_u64(key, value));
    else if (key == "emotion.freeze_embed") emotion.freeze_embed = parse_bool(key, value);
    // data
    else if (key == "data.train_frac") data.train_frac = parse_f64(key, value);
    else if (key == "data.val_frac") data.val_frac = parse_f64(key, value);
    else if (key == "data.test_frac") data.test_frac = parse_f64(key, value);
    else if (key == "data.split_seed") data.split_seed = parse_u64(key, value);
    else if (key == "data.vocab_file") data.vocab_file = value;
    else throw ValidationError("config: unknown key '" + key + "'");
}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: line " + std::to_string(lineno) + " is not key=value: " + t);
        cfg.set_key(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

std::string Config::serialize() const {
    std::ostringstream os;
    os << "data.split_seed=" << data.split_seed << "\n";
    os << "data.test_frac=" << format_double(data.test_frac) << "\n";
    os << "data.train_frac=" << format_double(data.train_frac) << "\n";
    os << "data.val_frac=" << format_double(data.val_frac) << "\n";
    os << "data.vocab_file=" << data.vocab_file << "\n";
    os << "emotion.freeze_embed=" << (emotion.freeze_embed ? "true" : "false") << "\n";
    os << "emotion.mode=" << emotion.mode << "\n";
    os << "emotion.timeout_ms=" << emotion.timeout_ms << "\n";
    os << "emotion.url=" << emotion.url << "\n";
    os << "model.align_width=" << model.align_width << "\n";
    os << "model.attn_width=" << model.attn_width << "\n";
    os << "model.context_heads=" << model.context_heads << "\n";
    os << "model.context_layers=" << model.context_layers << "\n";
    os << "model.cross_heads=" << model.cross_heads << "\n";
    os << "model.d=" << model.d << "\n";
    os << "model.d_vision=" << model.d_vision << "\n";
    os << "model.decoder_heads=" << model.decoder_heads << "\n";
    os << "model.decoder_layers=" << model.decoder_layers << "\n";
    os << "model.ln_eps=" << format_double(model.ln_eps) << "\n";
    os << "model.max_tokens=" << model.max_tokens << "\n";
    os << "model.mlp_ratio=" << model.mlp_ratio << "\n";
    os << "model.patch_grid=" << model.patch_grid << "\n";
    os << "model.patch_width=" << model.patch_width << "\n";
    os << "model.qk_swap=" << (model.qk_swap ? "true" : "false") << "\n";
    os << "model.layer_attn_hidden=" << model.layer_attn_hidden << "\n";
    os << "model.score_hidden=" << model.score_hidden << "\n";
    os << "model.text_heads=" << model.text_heads << "\n";
    os << "model.text_layers=" << model.text_layers << "\n";
    os << "model.vocab_size=" << model.vocab_size << "\n";
    os << "optim.beta1=" << format_double(optim.beta1) << "\n";
    os << "optim.beta2=" << format_double(optim.beta2) << "\n";
    os << "optim.eps=" << format_double(optim.eps) << "\n";
    os << "optim.weight_decay=" << format_double(optim.weight_decay) << "\n";
    os << "sched.lr_min=" << format_double(sched.lr_min) << "\n";
    os << "sched.t0=" << sched.t0 << "\n";
    os << "sched.t_mult=" << sched.t_mult << "\n";
    os << "train.batch_size=" << train.batch_size << "\n";
    os << "train.clip_norm=" << format_double(train.clip_norm) << "\n";
    os << "train.early_stop_ap50=" << format_double(train.early_stop_ap50) << "\n";
    os << "train.epochs=" << train.epochs << "\n";
    os << "train.eval_train=" << (train.eval_train ? "true" : "false") << "\n";
    os << "train.fraction=" << format_double(train.fraction) << "\n";
    os << "train.lr=" << format_double(train.lr) << "\n";
    os << "train.max_steps=" << train.max_steps << "\n";
    os << "train.seed=" << train.seed << "\n";
    return os.str();
}

void Config::validate() const {
    model.validate();
    if (train.batch_size < 1) throw ValidationError("config: train.batch_size must be >= 1");
    if (train.lr <= 0) throw ValidationError("config: train.lr must be positive");
    if (train.fraction <= 0 || train.fraction > 1)
        throw ValidationError("config: train.fraction must be in (0,1]");
    if (train.clip_norm < 0) throw ValidationError("config: train.clip_norm must be >= 0");
    if (train.early_stop_ap50 < 0 || train.early_stop_ap50 > 1)
        throw ValidationError("config: train.early_stop_ap50 must be in [0,1]");
    if (optim.beta1 <= 0 || optim.beta1 >= 1) throw ValidationError("config: optim.beta1 must be in (0,1)");
    if (optim.beta2 <= 0 || optim.beta2 >= 1) throw ValidationError("config: optim.beta2 must be in (0,1)");
    if (optim.eps <= 0) throw ValidationError("config: optim.eps must be positive");
    if (optim.weight_decay < 0) throw ValidationError("config: optim.weight_decay must be >= 0");
    if (sched.t_mult < 1) throw ValidationError("config: sched.t_mult must be >= 1");
    if (sched.lr_min < 0 || sched.lr_min > train.lr)
        throw ValidationError("config: sched.lr_min must be in [0, train.lr]");
    if (emotion.mode != "rule" && emotion.mode != "external")
        throw ValidationError("config: emotion.mode must be rule or external");
    if (emotion.mode == "external" && emotion.url.empty())
        throw ValidationError("config: emotion.mode=external requires emotion.url");
    if (emotion.timeout_ms <= 0) throw ValidationError("config: emotion.timeout_ms must be positive");
    if (data.train_frac <= 0) throw ValidationError("config: data.train_frac must be positive");
    if (data.val_frac < 0 || data.test_frac < 0)
        throw ValidationError("config: data fractions must be >= 0");
    if (data.train_frac + data.val_frac + data.test_frac > 1.0 + 1e-9)
        throw ValidationError("config: data fractions sum exceeds 1");
}

}  // namespace vground
