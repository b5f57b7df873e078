#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rays.hpp"
#include "invrend/graph.hpp"
#include "invrend/quadrature.hpp"

using namespace invrend;
using invrend::testing::random_hitting_ray;
using invrend::testing::sphere_hit;

namespace {

double sphere_sdf(const Vec3& x, double r) { return length(x) - r; }

std::vector<double> sdf_along(const Ray& ray, const std::vector<double>& t, double r) {
    std::vector<double> f(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) f[i] = sphere_sdf(ray.origin + ray.dir * t[i], r);
    return f;
}

}  // namespace

TEST_CASE("ray_from_pixel: optical axis and hand projection") {
    const Camera cam = look_at({0, 0, 3}, {0, 0, 0}, {0, 1, 0}, 64, 48, 0.4);
    // Pixel (31.5, 23.5) is not an integer; the centre of the image sits on the
    // corner shared by pixels (31, 23) and (32, 24).
    const Ray axis = make_ray(cam.center(), cam.direction(32.0, 24.0));
    CHECK(axis.dir[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(axis.dir[1] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(axis.dir[2] == doctest::Approx(-1.0));
    CHECK(axis.t_near == doctest::Approx(2.0));
    CHECK(axis.t_far == doctest::Approx(4.0));
    CHECK_FALSE(axis.background);

    const double f = 32.0 / std::tan(0.4);
    const Ray r = ray_from_pixel(cam, 10, 5);
    // Camera space (u - cx, v - cy, f) with y down and z forward; world x = cam x,
    // world y = -cam y, world z = -cam z.
    const double cx = 10.5 - 32.0, cy = 5.5 - 24.0;
    const double len = std::sqrt(cx * cx + cy * cy + f * f);
    CHECK(r.dir[0] == doctest::Approx(cx / len).epsilon(1e-12));
    CHECK(r.dir[1] == doctest::Approx(-cy / len).epsilon(1e-12));
    CHECK(r.dir[2] == doctest::Approx(-f / len).epsilon(1e-12));
    CHECK(length(r.dir) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(ray_from_pixel(cam, 64, 0), std::out_of_range);
}

TEST_CASE("make_ray: tangent and missing rays are background") {
    const Ray tangent = make_ray({-3, 1, 0}, {1, 0, 0});
    CHECK(tangent.background);
    CHECK(tangent.t_near == doctest::Approx(tangent.t_far));
    CHECK(make_ray({-3, 2, 0}, {1, 0, 0}).background);
    const Ray inside = make_ray({0, 0, 0}, {0, 0, 1});
    CHECK_FALSE(inside.background);
    CHECK(inside.t_near == 0.0);
    CHECK(inside.t_far == doctest::Approx(1.0));
}

TEST_CASE("stratified_samples: midpoints, determinism, bounds") {
    const Ray ray = make_ray({0, 0, -3}, {0, 0, 1});
    const auto mid = stratified_samples(ray, 4, nullptr);
    REQUIRE(mid.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(mid[i] == doctest::Approx(2.0 + 0.5 * (i + 0.5)));

    std::mt19937_64 a(7), b(7);
    CHECK(stratified_samples(ray, 16, &a) == stratified_samples(ray, 16, &b));

    std::mt19937_64 rng(11);
    for (int k = 0; k < 1000; ++k) {
        const auto t = stratified_samples(ray, 8, &rng);
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(t[i] >= ray.t_near);
            CHECK(t[i] <= ray.t_far);
            if (i > 0) CHECK(t[i] > t[i - 1]);
        }
    }
    CHECK_THROWS_AS(stratified_samples(ray, 1, nullptr), std::invalid_argument);
}

TEST_CASE("logistic_cdf") {
    CHECK(logistic_cdf(0.0, 5.0) == 0.5);
    for (double x : {0.01, 0.3, 2.0}) CHECK(logistic_cdf(x, 7.0) + logistic_cdf(-x, 7.0) == doctest::Approx(1.0));
    CHECK(logistic_cdf(0.1, 10.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
    CHECK(logistic_cdf(0.1, 10.0) == doctest::Approx(0.731058).epsilon(1e-6));
}

TEST_CASE("alpha_discrete") {
    CHECK(alpha_discrete(0.2, 0.2, 10.0) == 0.0);
    const double p = 1.0 / (1.0 + std::exp(-1.0)), q = 1.0 / (1.0 + std::exp(1.0));
    CHECK(alpha_discrete(0.1, -0.1, 10.0) == doctest::Approx((p - q) / p).epsilon(1e-13));
    CHECK(alpha_discrete(0.1, -0.1, 10.0) == doctest::Approx(0.632120).epsilon(1e-6));
    CHECK(alpha_discrete(-0.1, 0.1, 10.0) == 0.0);
    CHECK(alpha_discrete(10.0, -10.0, 1000.0) <= kAlphaMax);
}

TEST_CASE("weights: examples") {
    const auto half = weights({0.5, 0.5});
    CHECK(half.w[0] == 0.5);
    CHECK(half.w[1] == 0.25);
    CHECK(half.w_sum == 0.75);

    const auto full = weights({1.0, 0.7});
    CHECK(full.w[0] == 1.0);
    CHECK(full.w[1] == 0.0);
    CHECK(full.argmax == 0);

    const auto none = weights({0.0, 0.0, 0.0});
    CHECK(none.w_sum == 0.0);
    for (double w : none.w) CHECK(w == 0.0);

    // Equal weights: 0.5 then 0.5 of the remaining 0.5 with alpha 1 ties at index 0.
    CHECK(weights({0.5, 1.0}).argmax == 0);
}

TEST_CASE("weights: invariants over random profiles") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> a(1 + rng() % 64);
        for (double& x : a) x = u(rng) < 0.2 ? 0.0 : u(rng);
        const auto p = weights(a);
        double prod = 1.0, sum = 0.0, trans = 1.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(p.w[i] >= 0.0);
            CHECK(p.w[i] <= 1.0);
            CHECK(p.w[i] == doctest::Approx(a[i] * trans).epsilon(1e-12));
            const double next = trans * (1.0 - a[i]);
            CHECK(next <= trans);
            trans = next;
            prod *= 1.0 - a[i];
            sum += p.w[i];
        }
        CHECK(std::fabs(sum - (1.0 - prod)) <= 1e-12);
        CHECK(std::fabs(p.w_sum - (1.0 - prod)) <= 1e-12);
        CHECK(p.argmax == static_cast<std::size_t>(std::max_element(p.w.begin(), p.w.end()) - p.w.begin()));
    }
}

TEST_CASE("weights_graph agrees with the scalar path") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    const std::size_t rows = 3, n = 12;
    Tensor f = Tensor::matrix(rows, n);
    for (double& x : f.data) x = u(rng);
    ad::Graph g;
    const auto wv = weights_graph(g.constant(f), g.constant(Tensor::scalar(20.0)));
    const Tensor& w = wv.w.value();
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> fr(f.row(r).begin(), f.row(r).end());
        const auto p = weights(interval_alphas(fr, 20.0));
        for (std::size_t i = 0; i + 1 < n; ++i) CHECK(w(r, i) == doctest::Approx(p.w[i]).epsilon(1e-12));
        CHECK(w(r, n - 1) == 0.0);
        CHECK(wv.w_sum.value()(r, 0) == doctest::Approx(p.w_sum).epsilon(1e-12));
    }
}

TEST_CASE("importance_resample") {
    const std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0};
    const auto flat = importance_resample(t, {1.0, 1.0, 1.0, 1.0}, 8);
    REQUIRE(flat.size() == 13);
    const auto extra = inverse_cdf_samples(t, {1.0, 1.0, 1.0, 1.0}, 8);
    for (std::size_t j = 0; j < extra.size(); ++j) CHECK(extra[j] == doctest::Approx(4.0 * (j + 0.5) / 8.0));

    const auto delta = inverse_cdf_samples(t, {0.0, 0.0, 1.0, 0.0}, 16);
    // The 1e-5 floor leaves 3e-5 of mass outside interval 2 out of 1.00004.
    for (double x : delta) {
        CHECK(x >= 2.0);
        CHECK(x <= 3.0);
    }
    const auto merged = importance_resample(t, {0.0, 0.0, 1.0, 0.0}, 16);
    for (std::size_t i = 1; i < merged.size(); ++i) CHECK(merged[i] > merged[i - 1]);
    CHECK_THROWS_AS(importance_resample(t, {1.0}, 4), std::invalid_argument);
}

TEST_CASE("surface_index: delta, background, two surfaces") {
    WeightProfile p = weights({0.0, 0.0, 1.0, 0.0});
    CHECK(surface_index(p, 0.5) == 2);
    CHECK_THROWS_AS(surface_index(weights({0.1, 0.1}), 0.5), BackgroundRay);

    // Two shells of a hollow sphere pair along the z axis: zero crossings at
    // t = 1.5 and t = 3.5 (f = distance to the nearer of two balls).
    std::vector<double> t(400), f(400);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = 0.01 * (i + 0.5);
        const double z = -2.5 + t[i];
        f[i] = std::min(std::fabs(z + 0.5) - 0.5, std::fabs(z - 1.5) - 0.5);
    }
    const auto prof = weights(interval_alphas(f, 64.0));
    const std::size_t k = surface_index(prof, 0.5);
    CHECK(std::fabs(t[k] - 1.5) <= 0.01);
}

TEST_CASE("surface_index: sphere within one interval of the analytic hit") {
    // Near-normal incidence; the grazing case is covered below.
    std::mt19937_64 rng(13);
    for (int k = 0; k < 100; ++k) {
        const Ray ray = random_hitting_ray(rng, 0.25);
        const double hit = sphere_hit(ray.origin, ray.dir, 0.5);
        REQUIRE(hit > 0.0);
        const auto t = stratified_samples(ray, 256, nullptr);
        const auto prof = weights(interval_alphas(sdf_along(ray, t, 0.5), 64.0));
        const std::size_t i = surface_index(prof, 0.5);
        // The weight belongs to the interval [t_i, t_{i+1}].
        CHECK(std::fabs(0.5 * (t[i] + t[i + 1]) - hit) <= t[1] - t[0]);
    }
}

TEST_CASE("surface_index: grazing bias toward the camera shrinks with s") {
    // Impact parameter 0.48 on a radius 0.5 sphere: cos(incidence) = 0.28.
    const Ray ray = make_ray({0, 0.48, 3}, {0, 0, -1});
    const double hit = sphere_hit(ray.origin, ray.dir, 0.5);
    const auto t = stratified_samples(ray, 256, nullptr);
    const auto f = sdf_along(ray, t, 0.5);
    const double dt = t[1] - t[0];
    double prev = 1e9;
    for (double s : {64.0, 256.0, 1024.0}) {
        const std::size_t i = surface_index(weights(interval_alphas(f, s)), 0.5);
        const double err = 0.5 * (t[i] + t[i + 1]) - hit;
        if (s == 64.0) CHECK(err < -dt);
        CHECK(std::fabs(err) <= prev);
        prev = std::fabs(err);
    }
    CHECK(prev <= dt);
}

TEST_CASE("sample_rays: budget and ascending depths") {
    QuadratureConfig qc;
    qc.n_coarse = 32;
    qc.n_importance = 8;
    qc.up_rounds = 2;
    std::mt19937_64 rng(1);
    std::vector<Ray> rays;
    for (int k = 0; k < 6; ++k) rays.push_back(random_hitting_ray(rng, 0.45));
    const SdfBatchFn sdf = [](const Tensor& x) {
        std::vector<double> v(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) v[r] = sphere_sdf({x(r, 0), x(r, 1), x(r, 2)}, 0.5);
        return v;
    };
    const auto ts = sample_rays(rays, sdf, qc, &rng);
    REQUIRE(ts.size() == rays.size());
    for (std::size_t r = 0; r < rays.size(); ++r) {
        CHECK(ts[r].size() == qc.samples_per_ray());
        for (std::size_t i = 1; i < ts[r].size(); ++i) CHECK(ts[r][i] > ts[r][i - 1]);
        // Importance samples concentrate near the surface.
        const double hit = sphere_hit(rays[r].origin, rays[r].dir, 0.5);
        std::size_t near = 0;
        for (double t : ts[r]) near += std::fabs(t - hit) < 0.1;
        CHECK(near >= qc.up_rounds * qc.n_importance / 2);
    }
    const Tensor pts = sample_points(rays, ts);
    CHECK(pts.rows() == rays.size() * qc.samples_per_ray());
}
