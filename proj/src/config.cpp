#include "invrend/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace invrend {

using nlohmann::json;

namespace {

template <class V>
void visit(Config& c, V&& v) {
    FieldsConfig& f = c.fields;
    v("fields.sdf_depth", f.sdf_depth);
    v("fields.sdf_width", f.sdf_width);
    v("fields.feature_dim", f.feature_dim);
    v("fields.pe_octaves", f.pe_octaves);
    v("fields.init_radius", f.init_radius);
    v("fields.radiance_depth", f.radiance_depth);
    v("fields.radiance_width", f.radiance_width);
    v("fields.material_depth", f.material_depth);
    v("fields.material_width", f.material_width);
    v("fields.photon_depth", f.photon_depth);
    v("fields.photon_width", f.photon_width);
    v("fields.omega0", f.omega0);
    v("fields.init_sharpness", f.init_sharpness);
    v("fields.rgb_intensity", f.rgb_intensity);

    QuadratureConfig& q = c.quadrature;
    v("quadrature.n_coarse", q.n_coarse);
    v("quadrature.n_importance", q.n_importance);
    v("quadrature.up_rounds", q.up_rounds);
    v("quadrature.up_base_sharpness", q.up_base_sharpness);
    v("quadrature.perturb", q.perturb);
    v("quadrature.surface_threshold", q.surface_threshold);

    LossWeights& l = c.loss;
    v("loss.lambda1", l.lambda1);
    v("loss.lambda2", l.lambda2);
    v("loss.eikonal", l.eikonal);
    v("loss.hessian", l.hessian);
    v("loss.hessian_decay_end", l.hessian_decay_end);
    v("loss.hessian_mode", l.hessian_mode);
    v("loss.hessian_step", l.hessian_step);
    v("loss.light", l.light);
    v("loss.lambda3", l.lambda3);
    v("loss.lambda4", l.lambda4);
    v("loss.lambda5", l.lambda5);
    v("loss.mask", l.mask);

    v("bsdf.alpha_floor", c.bsdf.alpha_floor);
    v("bsdf.metallic_scales_diffuse", c.bsdf.metallic_scales_diffuse);

    TrainConfig& t = c.train;
    v("train.rays_per_step", t.rays_per_step);
    v("train.max_steps", t.max_steps);
    v("train.lr_base", t.lr_base);
    v("train.warmup_steps", t.warmup_steps);
    v("train.alpha_min", t.alpha_min);
    v("train.seed", t.seed);
    v("train.validate_every", t.validate_every);
    v("train.log_every", t.log_every);
    v("train.checkpoint_every", t.checkpoint_every);
    v("train.holdout_stride", t.holdout_stride);
    v("train.validation_view", t.validation_view);

    SynthConfig& s = c.synth;
    v("synth.shape", s.shape);
    v("synth.views", s.views);
    v("synth.resolution", s.resolution);
    v("synth.radius", s.radius);
    v("synth.albedo", s.albedo);
    v("synth.roughness", s.roughness);
    v("synth.metallic", s.metallic);
    v("synth.light_dir", s.light_dir);
    v("synth.intensity", s.intensity);
    v("synth.distance", s.distance);
    v("synth.half_fov_deg", s.half_fov_deg);
}

json::json_pointer pointer(const std::string& key) {
    std::string p = "/" + key;
    for (char& ch : p)
        if (ch == '.') ch = '/';
    return json::json_pointer(p);
}

template <class T>
void assign(T& member, const json& value, const std::string& key) {
    try {
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            if (!value.is_number_unsigned()) throw ConfigError("'" + key + "' must be a non-negative integer");
        } else if constexpr (std::is_same_v<T, int>) {
            if (!value.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
        } else if constexpr (std::is_same_v<T, double>) {
            if (!value.is_number()) throw ConfigError("'" + key + "' must be a number");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!value.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!value.is_string()) throw ConfigError("'" + key + "' must be a string");
        } else {
            if (!value.is_array() || value.size() != 3) throw ConfigError("'" + key + "' must be an array of 3 numbers");
            for (const auto& e : value)
                if (!e.is_number()) throw ConfigError("'" + key + "' must be an array of 3 numbers");
        }
        member = value.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("'" + key + "': " + e.what());
    }
}

void check_keys(const json& j, const std::string& prefix, const std::set<std::string>& known) {
    if (!j.is_object()) throw ConfigError(prefix.empty() ? "config must be a JSON object" : "'" + prefix + "' must be an object");
    for (const auto& [name, value] : j.items()) {
        const std::string key = prefix.empty() ? name : prefix + "." + name;
        if (known.count(key)) continue;
        bool section = false;
        for (const auto& k : known)
            if (k.rfind(key + ".", 0) == 0) section = true;
        if (!section) throw ConfigError("unknown config key '" + key + "'");
        check_keys(value, key, known);
    }
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    Config c;
    visit(c, [&](const std::string& k, auto&) { keys.push_back(k); });
    return keys;
}

std::string config_to_json(const Config& c) {
    json j;
    Config copy = c;
    visit(copy, [&](const std::string& k, auto& member) { j[pointer(k)] = member; });
    return j.dump(2) + "\n";
}

Config config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config JSON: ") + e.what());
    }
    const auto keys = config_keys();
    check_keys(j, "", std::set<std::string>(keys.begin(), keys.end()));
    Config c;
    visit(c, [&](const std::string& k, auto& member) {
        const auto p = pointer(k);
        if (j.contains(p)) assign(member, j.at(p), k);
    });
    validate_config(c);
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

void apply_override(Config& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    bool found = false;
    visit(c, [&](const std::string& k, auto& member) {
        if (k != key) return;
        found = true;
        assign(member, value, k);
    });
    if (!found) throw ConfigError("unknown config key '" + key + "'");
    validate_config(c);
}

void validate_config(const Config& c) {
    if (c.train.rays_per_step < 1) throw ConfigError("train.rays_per_step must be >= 1");
    if (!(c.train.lr_base > 0.0)) throw ConfigError("train.lr_base must be positive");
    if (c.train.max_steps < 1) throw ConfigError("train.max_steps must be >= 1");
    if (c.train.holdout_stride < 2) throw ConfigError("train.holdout_stride must be >= 2");
    if (c.train.alpha_min < 0.0 || c.train.alpha_min > 1.0) throw ConfigError("train.alpha_min must lie in [0, 1]");
    if (c.loss.hessian_mode != "fd" && c.loss.hessian_mode != "exact")
        throw ConfigError("loss.hessian_mode must be \"fd\" or \"exact\"");
    if (!(c.loss.hessian_step > 0.0)) throw ConfigError("loss.hessian_step must be positive");
    if (c.quadrature.n_coarse < 2) throw ConfigError("quadrature.n_coarse must be >= 2");
    if (c.fields.sdf_depth < 2 || c.fields.radiance_depth < 1 || c.fields.material_depth < 1 || c.fields.photon_depth < 1)
        throw ConfigError("network depths are too small");
    if (c.fields.pe_octaves < 0) throw ConfigError("fields.pe_octaves must be >= 0");
    if (c.synth.shape != "sphere" && c.synth.shape != "rounded-box")
        throw ConfigError("synth.shape must be sphere or rounded-box");
    if (c.synth.views == 0 || c.synth.resolution == 0) throw ConfigError("synth.views and synth.resolution must be >= 1");
}

}  // namespace invrend
