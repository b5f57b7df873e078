#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "invrend/bsdf.hpp"
#include "invrend/fields.hpp"
#include "invrend/losses.hpp"
#include "invrend/quadrature.hpp"

namespace invrend {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    std::size_t rays_per_step = 512;
    std::size_t max_steps = 20000;
    double lr_base = 3e-4;
    std::size_t warmup_steps = 500;
    double alpha_min = 0.05;
    std::uint64_t seed = 0;
    std::size_t validate_every = 2500;
    std::size_t log_every = 100;
    std::size_t checkpoint_every = 5000;
    std::size_t holdout_stride = 8;
    /// Which held-out view validate() renders (index into the holdout list).
    std::size_t validation_view = 0;
};

struct SynthConfig {
    std::string shape = "sphere";
    std::size_t views = 24;
    std::size_t resolution = 64;
    double radius = 0.5;
    std::array<double, 3> albedo{0.7, 0.3, 0.3};
    double roughness = 0.5;
    double metallic = 0.0;
    std::array<double, 3> light_dir{1.0, 1.0, 2.0};  // normalised on use
    std::array<double, 3> intensity{1.0, 1.0, 1.0};
    double distance = 3.0;
    double half_fov_deg = 22.0;
};

struct Config {
    FieldsConfig fields;
    QuadratureConfig quadrature;
    LossWeights loss;
    BsdfOptions bsdf;
    TrainConfig train;
    SynthConfig synth;
};

/// Every key as "section.name".
std::vector<std::string> config_keys();
std::string config_to_json(const Config& c);
/// Starts from defaults; unknown keys and ill-typed values throw ConfigError.
Config config_from_json(const std::string& text);
Config load_config(const std::string& path);
/// Applies "section.name=value"; the value is JSON, or a bare string.
void apply_override(Config& c, const std::string& assignment);
void validate_config(const Config& c);

}  // namespace invrend
