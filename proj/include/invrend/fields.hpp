#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "invrend/graph.hpp"
#include "invrend/mlp.hpp"

namespace invrend {

struct FieldsConfig {
    std::size_t sdf_depth = 8;
    std::size_t sdf_width = 256;
    std::size_t feature_dim = 256;
    int pe_octaves = 6;
    double init_radius = 0.5;
    std::size_t radiance_depth = 8;
    std::size_t radiance_width = 256;
    std::size_t material_depth = 8;
    std::size_t material_width = 256;
    std::size_t photon_depth = 8;
    std::size_t photon_width = 256;
    double omega0 = 30.0;
    double init_sharpness = 20.0;
    bool rgb_intensity = true;
};

/// (sin ρ cos φ, sin ρ sin φ, cos ρ)
std::array<double, 3> spherical_to_unit(double rho, double phi);

/// [x, sin(2^k x), cos(2^k x) for k < octaves]: 3 + 6·octaves columns.
ad::Var positional_encoding(ad::Var x, int octaves);
Tensor positional_encoding(const Tensor& x, int octaves);

struct SdfEval {
    ad::Var sdf;       // [P,1]
    ad::Var feature;   // [P,F]
    ad::Var gradient;  // [P,3], d sdf / d x
    ad::Var normal;    // [P,3], gradient / |gradient|
};

struct MaterialEval {
    ad::Var albedo;     // [P,3]
    ad::Var roughness;  // [P,1]
    ad::Var metallic;   // [P,1]
};

struct LightEval {
    ad::Var rho;        // [P,1] in [0, π]
    ad::Var phi;        // [P,1] in [0, 2π]
    ad::Var direction;  // [P,3], unit
    ad::Var intensity;  // [P,3], >= 0 (three equal columns in scalar mode)
};

/// The SDF, outgoing radiance, material and photon networks plus the
/// sharpness s = exp(10·v) of the logistic density.
class Fields {
public:
    Fields(const FieldsConfig& config, std::uint64_t seed);

    const FieldsConfig& config() const { return config_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    const Mlp& sdf_net() const { return sdf_; }
    const Mlp& radiance_net() const { return radiance_; }
    const Mlp& material_net() const { return material_; }
    const Mlp& photon_net() const { return photon_; }
    int sharpness_slot() const { return s_slot_; }

    double sharpness() const;
    ad::Var sharpness(const std::vector<ad::Var>& bound) const;

    /// `x` must be a graph input so the gradient can be taken. With
    /// create_graph the gradient (and normal) stay differentiable.
    SdfEval eval_sdf(const std::vector<ad::Var>& bound, ad::Var x, bool create_graph = true) const;
    ad::Var eval_radiance(const std::vector<ad::Var>& bound, ad::Var x, ad::Var n, ad::Var v, ad::Var feature) const;
    MaterialEval eval_material(const std::vector<ad::Var>& bound, ad::Var x, ad::Var n, ad::Var feature) const;
    LightEval eval_photon(const std::vector<ad::Var>& bound, ad::Var x, ad::Var n, ad::Var feature) const;

    /// Value-only SDF at points [P,3] -> [P].
    std::vector<double> sdf_values(const Tensor& x) const;

private:
    FieldsConfig config_;
    ParamStore store_;
    Mlp sdf_, radiance_, material_, photon_;
    int s_slot_ = -1;
};

}  // namespace invrend
