#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "invrend/camera.hpp"
#include "invrend/graph.hpp"
#include "invrend/vec.hpp"

namespace invrend {

/// Rays are clipped to the unit sphere that bounds the normalised scene.
struct Ray {
    Vec3 origin{};
    Vec3 dir{};
    double t_near = 0.0, t_far = 0.0;
    bool background = false;  // misses (or grazes) the bounding sphere
};

struct QuadratureConfig {
    std::size_t n_coarse = 64;
    std::size_t n_importance = 16;
    std::size_t up_rounds = 4;
    double up_base_sharpness = 64.0;  // round k uses base · 2^k
    bool perturb = true;
    /// Minimum accumulated weight for a ray to count as foreground.
    double surface_threshold = 0.5;

    std::size_t samples_per_ray() const { return n_coarse + up_rounds * n_importance; }
};

class BackgroundRay : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Ray make_ray(const Vec3& origin, const Vec3& dir);
Ray ray_from_pixel(const Camera& cam, double px, double py);

/// n samples in [t_near, t_far], one per equal stratum: the midpoint when
/// rng is null, uniformly jittered inside the stratum otherwise.
std::vector<double> stratified_samples(const Ray& ray, std::size_t n, std::mt19937_64* rng);

/// Φ_s(x) = 1 / (1 + exp(-s x))
double logistic_cdf(double x, double s);

/// max((Φ_s(f_i) - Φ_s(f_next)) / Φ_s(f_i), 0) clamped to [0, 1 - 1e-7].
double alpha_discrete(double f_i, double f_next, double s);

inline constexpr double kAlphaMax = 1.0 - 1e-7;

struct WeightProfile {
    std::vector<double> alpha;
    std::vector<double> w;
    double w_sum = 0.0;
    std::size_t argmax = 0;  // first index of the largest weight
};

WeightProfile weights(const std::vector<double>& alphas);

/// Alphas of the intervals between consecutive SDF samples.
std::vector<double> interval_alphas(const std::vector<double>& f, double s);

/// n deterministic inverse-CDF samples (u at stratum midpoints) from the
/// piecewise-constant density of w + 1e-5 over the intervals of t.
std::vector<double> inverse_cdf_samples(const std::vector<double>& t, const std::vector<double>& w, std::size_t n);

/// n_extra inverse-CDF samples drawn from the piecewise-constant density of
/// `w` over the intervals of `t` (w.size() == t.size() - 1), merged with `t`
/// and returned strictly ascending.
std::vector<double> importance_resample(const std::vector<double>& t, const std::vector<double>& w, std::size_t n_extra);

/// Argmax of the profile; throws BackgroundRay when w_sum < threshold.
std::size_t surface_index(const WeightProfile& profile, double threshold);

using SdfBatchFn = std::function<std::vector<double>(const Tensor& points)>;

/// Coarse stratified samples refined by config.up_rounds importance rounds.
/// Every ray receives exactly config.samples_per_ray() depths.
std::vector<std::vector<double>> sample_rays(const std::vector<Ray>& rays, const SdfBatchFn& sdf,
                                             const QuadratureConfig& config, std::mt19937_64* rng);

/// Points origin + t·dir for every (ray, sample), row-major [R·N, 3].
Tensor sample_points(const std::vector<Ray>& rays, const std::vector<std::vector<double>>& t);

struct WeightVars {
    ad::Var alpha;  // [R, N-1]
    ad::Var w;      // [R, N]; the last column is 0
    ad::Var w_sum;  // [R, 1]
};

/// Differentiable alpha and weights from SDF values f [R, N] and scalar s.
WeightVars weights_graph(ad::Var f, ad::Var s);

/// First index of the row maximum for each row of w.
std::vector<std::size_t> row_argmax(const Tensor& w);

}  // namespace invrend
