#include "invrend/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace invrend {

double mse(const std::vector<double>& image, const std::vector<double>& reference) {
    if (image.size() != reference.size()) throw std::invalid_argument("psnr: image shapes differ");
    if (image.empty()) throw std::invalid_argument("psnr: empty image");
    double s = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double d = image[i] - reference[i];
        s += d * d;
    }
    return s / static_cast<double>(image.size());
}

double psnr(const std::vector<double>& image, const std::vector<double>& reference, double cap) {
    const double m = mse(image, reference);
    if (m == 0.0) return cap;
    return std::min(cap, -10.0 * std::log10(m));
}

namespace {

struct PointGrid {
    Vec3 lo{};
    double cell = 1.0;
    long dims[3]{1, 1, 1};
    std::vector<std::size_t> start;  // CSR offsets per cell
    std::vector<std::size_t> items;

    long cell_of(double v, int a) const { return static_cast<long>(std::floor((v - lo[a]) / cell)); }
    std::size_t flat(long i, long j, long k) const {
        return static_cast<std::size_t>((k * dims[1] + j) * dims[0] + i);
    }
};

PointGrid build_grid(const std::vector<Vec3>& pts) {
    PointGrid g;
    Vec3 lo = pts[0], hi = pts[0];
    for (const Vec3& p : pts)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], 1e-12});
    const double target = std::max(1.0, std::cbrt(static_cast<double>(pts.size()) / 2.0));
    g.cell = extent / target;
    g.lo = lo;
    for (int a = 0; a < 3; ++a) g.dims[a] = std::max(1L, g.cell_of(hi[a], a) + 1);
    const std::size_t ncell = static_cast<std::size_t>(g.dims[0] * g.dims[1] * g.dims[2]);
    std::vector<std::size_t> which(pts.size());
    g.start.assign(ncell + 1, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        long c[3];
        for (int a = 0; a < 3; ++a) c[a] = std::clamp(g.cell_of(pts[i][a], a), 0L, g.dims[a] - 1);
        which[i] = g.flat(c[0], c[1], c[2]);
        ++g.start[which[i] + 1];
    }
    for (std::size_t c = 0; c < ncell; ++c) g.start[c + 1] += g.start[c];
    g.items.resize(pts.size());
    std::vector<std::size_t> fill(g.start.begin(), g.start.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) g.items[fill[which[i]]++] = i;
    return g;
}

double nearest(const PointGrid& g, const std::vector<Vec3>& pts, const Vec3& q) {
    long c[3];
    for (int a = 0; a < 3; ++a) c[a] = g.cell_of(q[a], a);
    double best2 = std::numeric_limits<double>::infinity();
    // Any point outside the rings visited so far is at least r·cell away.
    long reach = 0;
    for (int a = 0; a < 3; ++a) reach = std::max({reach, std::labs(c[a]), std::labs(c[a] - (g.dims[a] - 1))});
    long r0 = 0;
    for (int a = 0; a < 3; ++a) r0 = std::max({r0, -c[a], c[a] - (g.dims[a] - 1)});
    auto scan = [&](long i, long j, long k) {
        const std::size_t cell = g.flat(i, j, k);
        for (std::size_t s = g.start[cell]; s < g.start[cell + 1]; ++s) {
            const Vec3& p = pts[g.items[s]];
            const double dx = q[0] - p[0], dy = q[1] - p[1], dz = q[2] - p[2];
            best2 = std::min(best2, dx * dx + dy * dy + dz * dz);
        }
    };
    for (long r = r0; r <= reach; ++r) {
        for (long k = std::max(0L, c[2] - r); k <= std::min(g.dims[2] - 1, c[2] + r); ++k)
            for (long j = std::max(0L, c[1] - r); j <= std::min(g.dims[1] - 1, c[1] + r); ++j) {
                if (std::labs(k - c[2]) == r || std::labs(j - c[1]) == r) {
                    for (long i = std::max(0L, c[0] - r); i <= std::min(g.dims[0] - 1, c[0] + r); ++i) scan(i, j, k);
                } else {
                    if (c[0] - r >= 0 && c[0] - r < g.dims[0]) scan(c[0] - r, j, k);
                    if (r > 0 && c[0] + r >= 0 && c[0] + r < g.dims[0]) scan(c[0] + r, j, k);
                }
            }
        const double bound = static_cast<double>(r) * g.cell;
        if (best2 <= bound * bound) break;
    }
    return std::sqrt(best2);
}

}  // namespace

std::vector<double> nearest_distances(const std::vector<Vec3>& queries, const std::vector<Vec3>& points) {
    if (points.empty()) throw std::invalid_argument("nearest neighbour search over an empty set");
    const PointGrid g = build_grid(points);
    std::vector<double> out(queries.size());
    const long n = static_cast<long>(queries.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = nearest(g, points, queries[static_cast<std::size_t>(i)]);
    return out;
}

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer distance of an empty point set");
    auto mean = [](const std::vector<double>& d) {
        double s = 0.0;
        for (double v : d) s += v;
        return s / static_cast<double>(d.size());
    };
    return 0.5 * (mean(nearest_distances(a, b)) + mean(nearest_distances(b, a)));
}

std::vector<Vec3> sample_sphere(double radius, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::vector<Vec3> out(count);
    for (auto& p : out) {
        Vec3 v{};
        do {
            v = {gauss(rng), gauss(rng), gauss(rng)};
        } while (length(v) < 1e-12);
        p = normalized(v) * radius;
    }
    return out;
}

}  // namespace invrend
