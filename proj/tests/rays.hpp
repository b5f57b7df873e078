#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "invrend/quadrature.hpp"

namespace invrend::testing {

/// Ray from a uniform point on the sphere of radius `distance` towards a
/// uniform point of the disc of radius `spread` through the origin,
/// perpendicular to the line of sight.
inline Ray random_hitting_ray(std::mt19937_64& rng, double spread, double distance = 3.0) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec3 eye = normalized(Vec3{g(rng), g(rng), g(rng)}) * distance;
    const Vec3 z = normalized(eye * -1.0);
    const Vec3 a = std::fabs(z[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 x = normalized(cross(z, a));
    const Vec3 y = cross(z, x);
    const double rad = spread * std::sqrt(u(rng)), ang = 2.0 * std::numbers::pi * u(rng);
    return make_ray(eye, x * (rad * std::cos(ang)) + y * (rad * std::sin(ang)) - eye);
}

/// Nearest positive root of |o + t d| = r, or -1 on a miss.
inline double sphere_hit(const Vec3& o, const Vec3& d, double r) {
    const double b = dot(o, d);
    const double disc = b * b - (dot(o, o) - r * r);
    if (disc < 0.0) return -1.0;
    return -b - std::sqrt(disc);
}

}  // namespace invrend::testing
