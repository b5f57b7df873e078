#include "invrend/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace invrend {

namespace {

Vec3 rot_row(const Camera& c, int r) { return {c.W2C[4 * r], c.W2C[4 * r + 1], c.W2C[4 * r + 2]}; }
Vec3 translation(const Camera& c) { return {c.W2C[3], c.W2C[7], c.W2C[11]}; }

}  // namespace

Vec3 Camera::center() const {
    // -R^T t
    const Vec3 t = translation(*this);
    return rot_row(*this, 0) * -t[0] + rot_row(*this, 1) * -t[1] + rot_row(*this, 2) * -t[2];
}

Vec3 Camera::direction(double u, double v) const {
    // Invert the upper-triangular K with zero skew assumed away: solve K d = (u, v, 1).
    const double fx = K[0], s = K[1], cx = K[2], fy = K[4], cy = K[5];
    const double y = (v - cy) / fy;
    const double x = (u - cx - s * y) / fx;
    const Vec3 d = rot_row(*this, 0) * x + rot_row(*this, 1) * y + rot_row(*this, 2) * 1.0;
    return normalized(d);
}

std::array<double, 3> Camera::project(const Vec3& x) const {
    const Vec3 t = translation(*this);
    const Vec3 pc{dot(rot_row(*this, 0), x) + t[0], dot(rot_row(*this, 1), x) + t[1], dot(rot_row(*this, 2), x) + t[2]};
    const double u = K[0] * pc[0] + K[1] * pc[1] + K[2] * pc[2];
    const double v = K[4] * pc[1] + K[5] * pc[2];
    return {u / pc[2], v / pc[2], pc[2]};
}

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, std::size_t width, std::size_t height,
               double half_fov) {
    const Vec3 z = normalized(target - eye);
    const Vec3 x = normalized(cross(z, up));
    const Vec3 y = cross(z, x);
    Camera c;
    c.width = width;
    c.height = height;
    const double f = 0.5 * static_cast<double>(width) / std::tan(half_fov);
    c.K = {f, 0.0, 0.5 * static_cast<double>(width), 0.0, f, 0.5 * static_cast<double>(height), 0.0, 0.0, 1.0};
    const Vec3 rows[3] = {x, y, z};
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) c.W2C[4 * r + k] = rows[r][k];
        c.W2C[4 * r + 3] = -dot(rows[r], eye);
    }
    return c;
}

void validate_camera(const Camera& cam) {
    const auto& K = cam.K;
    const double det = K[0] * (K[4] * K[8] - K[5] * K[7]) - K[1] * (K[3] * K[8] - K[5] * K[6]) +
                       K[2] * (K[3] * K[7] - K[4] * K[6]);
    if (!(std::fabs(det) > 1e-12)) throw std::invalid_argument("camera intrinsics are singular");
    if (K[3] != 0.0 || K[6] != 0.0 || K[7] != 0.0 || K[8] != 1.0)
        throw std::invalid_argument("camera intrinsics must be upper triangular with K[2][2] = 1");
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const double d = dot(rot_row(cam, a), rot_row(cam, b));
            if (std::fabs(d - (a == b ? 1.0 : 0.0)) > 1e-6)
                throw std::invalid_argument("camera rotation is not orthonormal");
        }
    if (cam.width == 0 || cam.height == 0) throw std::invalid_argument("camera resolution is zero");
}

}  // namespace invrend
