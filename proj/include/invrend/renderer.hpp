#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "invrend/bsdf.hpp"
#include "invrend/camera.hpp"
#include "invrend/fields.hpp"
#include "invrend/graph.hpp"
#include "invrend/quadrature.hpp"

namespace invrend {

/// Everything the renderer needs at a batch of sample points ([P, *] each).
struct SampleShading {
    ad::Var sdf;         // [P,1]
    ad::Var gradient;    // [P,3]
    ad::Var normal;      // [P,3]
    ad::Var radiance;    // [P,3]
    ad::Var albedo;      // [P,3]
    ad::Var roughness;   // [P,1]
    ad::Var metallic;    // [P,1]
    ad::Var light_dir;   // [P,3]
    ad::Var intensity;   // [P,3]
};

class FieldSource {
public:
    virtual ~FieldSource() = default;
    /// `x` is a graph input [P,3]; `view` [P,3] points from the sample towards the camera.
    virtual SampleShading shade(ad::Graph& graph, ad::Var x, ad::Var view) const = 0;
    virtual ad::Var sharpness(ad::Graph& graph) const = 0;
    virtual std::vector<double> sdf_values(const Tensor& x) const = 0;
};

/// The trained networks, bound to one graph.
class NeuralSource final : public FieldSource {
public:
    NeuralSource(const Fields& fields, const std::vector<ad::Var>& bound, bool create_graph = true)
        : fields_(fields), bound_(bound), create_graph_(create_graph) {}
    SampleShading shade(ad::Graph& graph, ad::Var x, ad::Var view) const override;
    ad::Var sharpness(ad::Graph& graph) const override;
    std::vector<double> sdf_values(const Tensor& x) const override { return fields_.sdf_values(x); }

private:
    const Fields& fields_;
    const std::vector<ad::Var>& bound_;
    bool create_graph_;
};

/// Analytic sphere |x| - radius with constant material, light and radiance.
struct SphereScene {
    double radius = 0.5;
    double sharpness = 64.0;
    std::array<double, 3> albedo{0.7, 0.3, 0.3};
    double roughness = 0.5;
    double metallic = 0.0;
    Vec3 light_dir{0.0, 0.0, 1.0};
    std::array<double, 3> intensity{1.0, 1.0, 1.0};
    std::array<double, 3> radiance{0.5, 0.5, 0.5};
};

class AnalyticSource final : public FieldSource {
public:
    explicit AnalyticSource(SphereScene scene) : scene_(scene) {}
    SampleShading shade(ad::Graph& graph, ad::Var x, ad::Var view) const override;
    ad::Var sharpness(ad::Graph& graph) const override;
    std::vector<double> sdf_values(const Tensor& x) const override;
    const SphereScene& scene() const { return scene_; }

private:
    SphereScene scene_;
};

struct RenderOptions {
    BsdfOptions bsdf;
    /// Use these argmax indices instead of recomputing them (gradient checks).
    const std::vector<std::size_t>* fixed_argmax = nullptr;
};

struct RenderBatch {
    ad::Var x;                  // [P,3] sample points (graph input)
    SampleShading shading;      // at every sample
    ad::Var w;                  // [R,N]
    ad::Var w_sum;              // [R,1]
    ad::Var integrand;          // [P,3] bsdf · I
    ad::Var L_r, L_vol, L_surf;  // [R,3]
    std::vector<std::size_t> argmax;       // per ray, in [0, N)
    std::vector<std::size_t> surface_rows;  // per ray, row of the argmax sample in [0, P)
    std::vector<double> w_max;              // per ray
    std::size_t samples_per_ray = 0;
};

/// Renders rays with their sample depths t (equal count per ray) on `graph`.
RenderBatch render_rays(ad::Graph& graph, const FieldSource& source, const std::vector<Ray>& rays,
                        const std::vector<std::vector<double>>& t, const RenderOptions& options = {});

/// Per-pixel outputs of render_image, each [H·W·3] (or [H·W] for scalars),
/// row-major from the top-left pixel.
struct ImageSet {
    std::size_t width = 0, height = 0;
    std::vector<double> surf, vol, radiance, normal, albedo, light_dir;
    std::vector<double> roughness, metallic, w_sum;
    std::vector<unsigned char> foreground;
};

ImageSet render_image(const FieldSource& source, const Camera& cam, const QuadratureConfig& quad,
                      const RenderOptions& options = {}, std::size_t chunk = 512);

/// render_image for the neural fields: builds one graph per chunk.
ImageSet render_image(const Fields& fields, const Camera& cam, const QuadratureConfig& quad,
                      const RenderOptions& options = {}, std::size_t chunk = 512);

}  // namespace invrend
