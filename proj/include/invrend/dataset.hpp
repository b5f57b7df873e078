#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "invrend/bsdf.hpp"
#include "invrend/camera.hpp"
#include "invrend/config.hpp"
#include "invrend/image_io.hpp"
#include "invrend/quadrature.hpp"

namespace invrend {

/// Analytic scene used to synthesise ground truth.
struct GroundTruth {
    std::string shape = "sphere";  // "sphere" or "rounded-box"
    double radius = 0.5;           // sphere
    Vec3 half_extent{0.45, 0.45, 0.45};  // rounded box
    double corner = 0.15;                // rounded box
    std::array<double, 3> albedo{0.7, 0.3, 0.3};
    double roughness = 0.5;
    double metallic = 0.0;
    Vec3 light_dir{0.40824829046386301, 0.40824829046386301, 0.81649658092772603};  // normalize(1, 1, 2)
    std::array<double, 3> intensity{1.0, 1.0, 1.0};
};

double gt_sdf(const GroundTruth& gt, const Vec3& x);
Vec3 gt_normal(const GroundTruth& gt, const Vec3& x);
/// Nearest hit depth along the ray, if any.
std::optional<double> gt_intersect(const GroundTruth& gt, const Ray& ray);
/// Linear RGB the ground-truth scene shows along a ray; nullopt on a miss.
std::optional<std::array<double, 3>> gt_shade(const GroundTruth& gt, const Ray& ray, const BsdfOptions& opt = {});

struct SceneView {
    Camera camera;
    std::vector<double> rgb;   // linear [H·W·3]
    std::vector<double> mask;  // {0,1} [H·W]
    std::string image_file, mask_file;
};

struct SceneDataset {
    std::vector<SceneView> views;
    double scene_scale = 1.0;
    std::optional<GroundTruth> gt;
};

struct SynthSpec {
    GroundTruth gt;
    std::size_t views = 24;
    std::size_t width = 64, height = 64;
    double distance = 3.0;
    double half_fov_deg = 22.0;
    std::uint64_t seed = 0;
};

/// Cameras on a spiral around the origin, rendered by analytic intersection
/// and the BSDF (no networks involved).
SceneDataset make_synthetic(const SynthSpec& spec);

/// The synthetic scene described by the synth section (seeded by train.seed).
SynthSpec synth_spec(const Config& cfg);

/// Writes cameras.json, images/, masks/ and (if present) gt.json.
void save_dataset(const SceneDataset& data, const std::string& dir);
/// Reads a directory written by save_dataset. Camera translations are
/// divided by scene_scale so the object fits the unit sphere.
SceneDataset load_dataset(const std::string& dir);

/// Every `stride`-th view (indices stride-1, 2·stride-1, ...) is held out.
std::vector<std::size_t> holdout_views(std::size_t count, std::size_t stride = 8);
std::vector<std::size_t> training_views(std::size_t count, std::size_t stride = 8);

}  // namespace invrend
