#pragma once

#include <array>
#include <cstddef>

#include "invrend/vec.hpp"

namespace invrend {

/// Pinhole camera, OpenCV convention: x right, y down, z forward.
/// A world point X maps to pixel K · (R X + t).
struct Camera {
    std::array<double, 9> K{};     // row-major 3x3
    std::array<double, 12> W2C{};  // row-major [R | t]
    std::size_t width = 0, height = 0;

    Vec3 center() const;
    /// World-space unit direction through image point (u, v); pixel (i, j)
    /// has its centre at (i + 0.5, j + 0.5).
    Vec3 direction(double u, double v) const;
    /// Image coordinates of a world point, and its camera-space depth.
    std::array<double, 3> project(const Vec3& x) const;
};

/// Camera at `eye` looking at `target` with half field of view `half_fov`
/// (radians) across the image width.
Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, std::size_t width, std::size_t height,
               double half_fov);

/// Throws std::invalid_argument when K is singular or R is not orthonormal to 1e-6.
void validate_camera(const Camera& cam);

}  // namespace invrend
