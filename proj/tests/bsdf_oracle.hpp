#pragma once

// Plain double evaluation of the BSDF, written out term by term with
// std::pow and no shared helpers, for cross-checking bsdf_eval.

#include <algorithm>
#include <array>
#include <cmath>

namespace invrend::testing {

struct OracleBsdf {
    std::array<double, 3> diffuse{}, specular{}, total{};
};

inline OracleBsdf oracle_bsdf(const std::array<double, 3>& n, const std::array<double, 3>& v,
                              const std::array<double, 3>& l, const std::array<double, 3>& c, double r, double m,
                              bool metallic_scales_diffuse = true, double alpha_floor = 1e-3) {
    const double pi = 3.14159265358979323846;
    OracleBsdf out;
    const double nl0 = n[0] * l[0] + n[1] * l[1] + n[2] * l[2];
    if (nl0 <= 0.0) return out;
    double hx = l[0] + v[0], hy = l[1] + v[1], hz = l[2] + v[2];
    const double hn = std::sqrt(hx * hx + hy * hy + hz * hz);
    if (hn * hn > 1e-24) {
        hx /= hn;
        hy /= hn;
        hz /= hn;
    } else {
        hx = n[0];
        hy = n[1];
        hz = n[2];
    }
    auto cl = [](double x) { return std::min(1.0, std::max(1e-4, x)); };
    const double NL = cl(nl0);
    const double NV = cl(n[0] * v[0] + n[1] * v[1] + n[2] * v[2]);
    const double NH = cl(n[0] * hx + n[1] * hy + n[2] * hz);
    const double HV = cl(hx * v[0] + hy * v[1] + hz * v[2]);

    const double fl = std::pow(1.0 - NL, 5.0);
    const double fv = std::pow(1.0 - NV, 5.0);
    const double R = 2.0 * r * std::pow(HV, 2.0);
    const double alpha = std::max(r * r, alpha_floor);
    const double G = (NV / (2.0 * (alpha + (1.0 - alpha) * NV))) * (NL / (2.0 * (alpha + (1.0 - alpha) * NL)));
    const double D = std::pow(alpha, 2.0) / (pi * std::pow(std::pow(NH, 2.0) * (std::pow(alpha, 2.0) - 1.0) + 1.0, 2.0));
    for (int k = 0; k < 3; ++k) {
        const double fd = c[k] / pi * (1.0 - fl / 2.0) * (1.0 - fv / 2.0);
        const double fretro = c[k] / pi * R * (fl + fv + fl * fv * (R - 1.0));
        out.diffuse[k] = (fd + fretro) * (metallic_scales_diffuse ? 1.0 - m : 1.0);
        const double F0 = 0.04 * (1.0 - m) + c[k] * m;
        const double F = F0 + (1.0 - F0) * std::pow(1.0 - HV, 5.0);
        out.specular[k] = F * G * D / (4.0 * NV * NL);
        out.total[k] = out.diffuse[k] + out.specular[k];
    }
    return out;
}

}  // namespace invrend::testing
