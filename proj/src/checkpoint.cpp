#include "invrend/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace invrend {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'I', 'N', 'V', 'R', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& b) : bytes_(b) {}
    const char* take(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint is truncated or corrupt");
        const char* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    template <class T>
    T get() {
        T v;
        std::memcpy(&v, take(sizeof(T)), sizeof(T));
        return v;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_snapshot(const Snapshot& s) {
    if (s.params.size() != s.names.size() || s.adam_m.size() != s.params.size() || s.adam_v.size() != s.params.size())
        throw std::invalid_argument("snapshot arrays differ in length");
    json h;
    h["config"] = json::parse(config_to_json(s.config));
    h["step"] = s.step;
    h["adam_steps"] = s.adam_steps;
    h["params"] = json::array();
    for (std::size_t i = 0; i < s.params.size(); ++i)
        h["params"].push_back({{"name", s.names[i]}, {"shape", s.params[i].shape}});
    const std::string header = h.dump();
    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, header.size());
    out += header;
    for (const auto* group : {&s.params, &s.adam_m, &s.adam_v})
        for (const Tensor& t : *group) out.append(reinterpret_cast<const char*>(t.data.data()), t.numel() * sizeof(double));
    return out;
}

Snapshot decode_snapshot(const std::string& bytes) {
    Reader r(bytes);
    if (std::memcmp(r.take(sizeof kMagic), kMagic, sizeof kMagic) != 0) throw CheckpointError("not a checkpoint file");
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw CheckpointError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
    const auto hlen = r.get<std::uint64_t>();
    if (hlen > bytes.size()) throw CheckpointError("checkpoint is truncated or corrupt");
    Snapshot s;
    json h;
    try {
        h = json::parse(std::string(r.take(hlen), hlen));
        s.config = config_from_json(h.at("config").dump());
        s.step = h.at("step").get<std::size_t>();
        s.adam_steps = h.at("adam_steps").get<std::size_t>();
        for (const auto& p : h.at("params")) {
            s.names.push_back(p.at("name").get<std::string>());
            s.params.emplace_back(p.at("shape").get<Shape>(), 0.0);
        }
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("corrupt checkpoint config: ") + e.what());
    }
    s.adam_m = s.params;
    s.adam_v = s.params;
    for (auto* group : {&s.params, &s.adam_m, &s.adam_v})
        for (Tensor& t : *group) std::memcpy(t.data.data(), r.take(t.numel() * sizeof(double)), t.numel() * sizeof(double));
    if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");
    return s;
}

void save_checkpoint(const std::string& path, const Snapshot& s) {
    const std::string bytes = encode_snapshot(s);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + path);
}

Snapshot load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read checkpoint " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return decode_snapshot(ss.str());
}

Snapshot make_snapshot(const Config& config, std::size_t step, const Fields& fields, const Adam& adam) {
    Snapshot s;
    s.config = config;
    s.step = step;
    const ParamStore& store = fields.params();
    for (std::size_t i = 0; i < store.size(); ++i) s.names.push_back(store.name(static_cast<int>(i)));
    s.params = store.values();
    s.adam_m = adam.first_moment();
    s.adam_v = adam.second_moment();
    s.adam_steps = adam.steps();
    return s;
}

Fields restore_fields(const Snapshot& s) {
    Fields f(s.config.fields, s.config.train.seed);
    ParamStore& store = f.params();
    if (store.size() != s.params.size()) throw CheckpointError("checkpoint does not match the configured networks");
    for (std::size_t i = 0; i < store.size(); ++i) {
        if (store.name(static_cast<int>(i)) != s.names[i] || store.value(static_cast<int>(i)).shape != s.params[i].shape)
            throw CheckpointError("checkpoint parameter '" + s.names[i] + "' does not match the configured networks");
        store.value(static_cast<int>(i)) = s.params[i];
    }
    return f;
}

Adam restore_adam(const Snapshot& s) {
    Adam a(s.params);
    a.first_moment() = s.adam_m;
    a.second_moment() = s.adam_v;
    a.set_steps(s.adam_steps);
    return a;
}

}  // namespace invrend
