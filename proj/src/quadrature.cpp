#include "invrend/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "ops_common.hpp"

namespace invrend {

namespace {

// log Φ(z), stable for large |z|.
double log_sigmoid(double z) { return -ad::detail::softplus(-z); }

}  // namespace

Ray make_ray(const Vec3& origin, const Vec3& dir) {
    Ray ray;
    ray.origin = origin;
    ray.dir = normalized(dir);
    const double b = dot(ray.origin, ray.dir);
    const double c = dot(ray.origin, ray.origin) - 1.0;
    const double disc = b * b - c;
    if (disc <= 1e-12) {
        ray.background = true;
        const double t = std::max(0.0, -b);
        ray.t_near = ray.t_far = t;
        return ray;
    }
    const double root = std::sqrt(disc);
    ray.t_near = std::max(0.0, -b - root);
    ray.t_far = -b + root;
    ray.background = ray.t_far <= ray.t_near;
    return ray;
}

Ray ray_from_pixel(const Camera& cam, double px, double py) {
    if (px < 0.0 || py < 0.0 || px >= static_cast<double>(cam.width) || py >= static_cast<double>(cam.height))
        throw std::out_of_range("pixel outside the image");
    return make_ray(cam.center(), cam.direction(px + 0.5, py + 0.5));
}

std::vector<double> stratified_samples(const Ray& ray, std::size_t n, std::mt19937_64* rng) {
    if (n < 2) throw std::invalid_argument("stratified_samples needs n >= 2");
    std::vector<double> t(n);
    const double step = (ray.t_far - ray.t_near) / static_cast<double>(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double off = rng ? u(*rng) : 0.5;
        t[i] = ray.t_near + (static_cast<double>(i) + off) * step;
    }
    for (std::size_t i = 1; i < n; ++i)
        if (t[i] <= t[i - 1]) t[i] = std::nextafter(t[i - 1], ray.t_far + 1.0);
    return t;
}

double logistic_cdf(double x, double s) { return ad::detail::sigmoid(s * x); }

double alpha_discrete(double f_i, double f_next, double s) {
    const double a = 1.0 - std::exp(log_sigmoid(s * f_next) - log_sigmoid(s * f_i));
    return std::clamp(a, 0.0, kAlphaMax);
}

WeightProfile weights(const std::vector<double>& alphas) {
    WeightProfile p;
    p.alpha = alphas;
    p.w.resize(alphas.size());
    double transmittance = 1.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        p.w[i] = alphas[i] * transmittance;
        transmittance *= 1.0 - alphas[i];
        if (p.w[i] > p.w[p.argmax]) p.argmax = i;
    }
    p.w_sum = 1.0 - transmittance;
    return p;
}

std::vector<double> interval_alphas(const std::vector<double>& f, double s) {
    std::vector<double> a(f.size() > 0 ? f.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < f.size(); ++i) a[i] = alpha_discrete(f[i], f[i + 1], s);
    return a;
}

std::vector<double> inverse_cdf_samples(const std::vector<double>& t, const std::vector<double>& w,
                                        std::size_t n) {
    if (w.size() + 1 != t.size()) throw std::invalid_argument("importance_resample: need one weight per interval");
    std::vector<double> cdf(w.size() + 1, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) cdf[i + 1] = cdf[i] + w[i] + 1e-5;
    const double total = cdf.back();
    std::vector<double> out;
    out.reserve(n);
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(n) * total;
        while (k + 1 < w.size() && cdf[k + 1] < u) ++k;
        const double frac = (u - cdf[k]) / (cdf[k + 1] - cdf[k]);
        out.push_back(t[k] + std::clamp(frac, 0.0, 1.0) * (t[k + 1] - t[k]));
    }
    return out;
}

std::vector<double> importance_resample(const std::vector<double>& t, const std::vector<double>& w,
                                        std::size_t n_extra) {
    std::vector<double> out = t;
    const std::vector<double> extra = inverse_cdf_samples(t, w, n_extra);
    out.insert(out.end(), extra.begin(), extra.end());
    std::sort(out.begin(), out.end());
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i] <= out[i - 1]) out[i] = out[i - 1] + 1e-9;
    return out;
}

std::size_t surface_index(const WeightProfile& profile, double threshold) {
    if (profile.w_sum < threshold) throw BackgroundRay("accumulated weight below the surface threshold");
    return profile.argmax;
}

std::vector<std::vector<double>> sample_rays(const std::vector<Ray>& rays, const SdfBatchFn& sdf,
                                             const QuadratureConfig& config, std::mt19937_64* rng) {
    const std::size_t nr = rays.size();
    std::vector<std::vector<double>> t(nr), f(nr);
    for (std::size_t r = 0; r < nr; ++r) t[r] = stratified_samples(rays[r], config.n_coarse, rng);
    if (config.up_rounds == 0 || config.n_importance == 0 || nr == 0) return t;

    auto eval = [&](const std::vector<std::vector<double>>& ts) { return sdf(sample_points(rays, ts)); };

    const std::vector<double> vals = eval(t);
    for (std::size_t r = 0, row = 0; r < nr; ++r) {
        f[r].assign(vals.begin() + static_cast<long>(row), vals.begin() + static_cast<long>(row + t[r].size()));
        row += t[r].size();
    }

    for (std::size_t round = 0; round < config.up_rounds; ++round) {
        const double s = config.up_base_sharpness * std::ldexp(1.0, static_cast<int>(round));
        std::vector<std::vector<double>> fresh(nr);
        for (std::size_t r = 0; r < nr; ++r)
            fresh[r] = inverse_cdf_samples(t[r], weights(interval_alphas(f[r], s)).w, config.n_importance);
        const std::vector<double> fv = eval(fresh);
        for (std::size_t r = 0, row = 0; r < nr; ++r) {
            std::vector<std::pair<double, double>> tf;
            tf.reserve(t[r].size() + fresh[r].size());
            for (std::size_t i = 0; i < t[r].size(); ++i) tf.emplace_back(t[r][i], f[r][i]);
            for (std::size_t i = 0; i < fresh[r].size(); ++i) tf.emplace_back(fresh[r][i], fv[row + i]);
            row += fresh[r].size();
            std::stable_sort(tf.begin(), tf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            t[r].resize(tf.size());
            f[r].resize(tf.size());
            for (std::size_t i = 0; i < tf.size(); ++i) {
                t[r][i] = tf[i].first;
                f[r][i] = tf[i].second;
                if (i > 0 && t[r][i] <= t[r][i - 1]) t[r][i] = t[r][i - 1] + 1e-9;
            }
        }
    }
    return t;
}

Tensor sample_points(const std::vector<Ray>& rays, const std::vector<std::vector<double>>& t) {
    std::size_t total = 0;
    for (const auto& v : t) total += v.size();
    Tensor pts(Shape{total, 3});
    std::size_t row = 0;
    for (std::size_t r = 0; r < rays.size(); ++r)
        for (double ti : t[r]) {
            for (int k = 0; k < 3; ++k) pts(row, k) = rays[r].origin[k] + ti * rays[r].dir[k];
            ++row;
        }
    return pts;
}

WeightVars weights_graph(ad::Var f, ad::Var s) {
    using namespace ad;
    const std::size_t n = f.cols();
    if (n < 2) throw ShapeError("weights_graph needs at least two samples per ray");
    const Var sf = mul(f, s);
    const Var logsig = neg(softplus(neg(sf)));
    const Var d = sub(slice_cols(logsig, 1, n), slice_cols(logsig, 0, n - 1));
    WeightVars out;
    out.alpha = clamp(sub(f.graph->constant(Tensor::scalar(1.0)), exp(d)), 0.0, kAlphaMax);
    const Var log_trans = cumsum_exclusive(log(add_scalar(neg(out.alpha), 1.0)));
    out.w = pad_cols(mul(out.alpha, exp(log_trans)), n, 0);
    out.w_sum = sum_to(out.w, Shape{f.rows(), 1});
    return out;
}

std::vector<std::size_t> row_argmax(const Tensor& w) {
    std::vector<std::size_t> idx(w.rows(), 0);
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 1; c < w.cols(); ++c)
            if (w(r, c) > w(r, idx[r])) idx[r] = c;
    return idx;
}

}  // namespace invrend
