#include "vground/checkpoint.hpp"

#include <cstring>
#include <map>

#include "vground/error.hpp"
#include "vground/util.hpp"

namespace vground {

namespace {

constexpr char kMagic[8] = {'V', 'G', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw ValidationError("checkpoint: truncated file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string bytes(size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const Config& cfg, ModelState& model, AdamW* optimizer) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, 1);

    const std::string config_text = cfg.serialize();
    put_u64(out, config_text.size());
    out += config_text;

    auto params = model.parameters();
    put_u64(out, params.size());
    for (auto& [name, t] : params) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<uint32_t>(t.shape().size()));
        for (size_t d : t.shape()) put_u64(out, d);
        for (double v : t.data()) put_f64(out, v);
    }

    if (optimizer) {
        if (optimizer->params().size() != params.size())
            throw ValidationError("checkpoint: optimizer does not cover all model parameters");
        out.push_back(1);
        put_u64(out, optimizer->step_count());
        for (size_t i = 0; i < params.size(); ++i) {
            for (double v : optimizer->first_moment(i)) put_f64(out, v);
            for (double v : optimizer->second_moment(i)) put_f64(out, v);
        }
    } else {
        out.push_back(0);
    }

    write_file(path, out);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const std::string buf = read_file(path);
    Reader r{buf};
    if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
        throw ValidationError("checkpoint: bad magic in " + path);
    const uint32_t version = r.u32();
    if (version != 1)
        throw ValidationError("checkpoint: unsupported version " + std::to_string(version));

    LoadedCheckpoint out;
    const size_t cfg_len = r.u64();
    out.config = Config::parse(r.bytes(cfg_len));
    out.config.validate();
    out.model = ModelState::init(out.config.model, 0);

    std::map<std::string, Tensor> by_name;
    for (auto& [name, t] : out.model.parameters()) by_name.emplace(name, t);

    const size_t n_params = r.u64();
    if (n_params != by_name.size())
        throw ValidationError("checkpoint: parameter count " + std::to_string(n_params) +
                              " does not match config-built model (" + std::to_string(by_name.size()) +
                              ")");
    std::vector<Tensor> ordered;
    ordered.reserve(n_params);
    for (size_t p = 0; p < n_params; ++p) {
        const size_t name_len = r.u32();
        const std::string name = r.bytes(name_len);
        auto it = by_name.find(name);
        if (it == by_name.end()) throw ValidationError("checkpoint: unknown parameter " + name);
        const size_t ndim = r.u32();
        std::vector<size_t> shape(ndim);
        for (auto& d : shape) d = r.u64();
        if (shape != it->second.shape())
            throw ValidationError("checkpoint: shape mismatch for " + name);
        auto& value = it->second.node()->value;
        for (auto& v : value) v = r.f64();
        ordered.push_back(it->second);
    }

    r.need(1);
    out.has_optimizer = buf[r.pos++] != 0;
    if (out.has_optimizer) {
        out.step_count = r.u64();
        out.first_moments.resize(n_params);
        out.second_moments.resize(n_params);
        // moments follow the stored parameter order, which save_checkpoint
        // makes identical to the model's visit order
        for (size_t i = 0; i < n_params; ++i) {
            out.first_moments[i].resize(ordered[i].numel());
            for (auto& v : out.first_moments[i]) v = r.f64();
            out.second_moments[i].resize(ordered[i].numel());
            for (auto& v : out.second_moments[i]) v = r.f64();
        }
    }
    if (r.pos != buf.size()) throw ValidationError("checkpoint: trailing bytes in " + path);
    return out;
}

}  // namespace vground
