#pragma once

// Disney-style BSDF: diffuse with retro-reflection plus a Schlick/GGX-form
// specular lobe. Evaluated with cosines clamped to [kCosEps, 1] and
// α = max(roughness², alpha_floor).

#include <array>
#include <cmath>
#include <memory>
#include <numbers>

#include "invrend/dual.hpp"
#include "invrend/graph.hpp"

namespace invrend {

inline constexpr double kCosEps = 1e-4;

struct BsdfOptions {
    double alpha_floor = 1e-3;
    /// Scale the diffuse lobe by (1 - metallic).
    bool metallic_scales_diffuse = true;
};

template <class T>
using V3 = std::array<T, 3>;

template <class T>
struct BsdfValue {
    V3<T> diffuse{};
    V3<T> specular{};
    V3<T> total{};
};

namespace bsdf {

template <class T>
T dot3(const V3<T>& a, const V3<T>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

template <class T>
T clamp_cos(const T& x) {
    if (value_of(x) < kCosEps) return T(kCosEps);
    if (value_of(x) > 1.0) return T(1.0);
    return x;
}

template <class T>
T pow5(const T& x) {
    const T x2 = x * x;
    return x2 * x2 * x;
}

/// normalize(l + v); returns `fallback` and sets `degenerate` when l = -v.
template <class T>
V3<T> half_vector(const V3<T>& l, const V3<T>& v, const V3<T>& fallback, bool* degenerate = nullptr) {
    const V3<T> s{l[0] + v[0], l[1] + v[1], l[2] + v[2]};
    const T len2 = dot3(s, s);
    if (degenerate) *degenerate = !(value_of(len2) > 1e-24);
    if (!(value_of(len2) > 1e-24)) return fallback;
    using std::sqrt;
    const T len = sqrt(len2);
    return {s[0] / len, s[1] / len, s[2] / len};
}

/// (f_l, f_v) = ((1 - n·l)^5, (1 - n·v)^5)
template <class T>
std::array<T, 2> schlick_weights(const T& nl, const T& nv) {
    return {pow5(T(1.0) - nl), pow5(T(1.0) - nv)};
}

template <class T>
T retro_R(const T& r, const T& hv) {
    return 2.0 * r * hv * hv;
}

template <class T>
V3<T> f_diffuse(const V3<T>& c, const T& r, const T& nl, const T& nv, const T& hv) {
    const auto [fl, fv] = schlick_weights(nl, nv);
    const T R = retro_R(r, hv);
    const T lambert = (T(1.0) - fl * 0.5) * (T(1.0) - fv * 0.5);
    const T retro = R * (fl + fv + fl * fv * (R - 1.0));
    V3<T> out;
    for (int k = 0; k < 3; ++k) out[k] = c[k] / std::numbers::pi * lambert + c[k] / std::numbers::pi * retro;
    return out;
}

template <class T>
V3<T> fresnel(const T& hv, const V3<T>& c, const T& m) {
    const T w = pow5(T(1.0) - hv);
    V3<T> out;
    for (int k = 0; k < 3; ++k) {
        const T f0 = 0.04 * (T(1.0) - m) + c[k] * m;
        out[k] = f0 + (T(1.0) - f0) * w;
    }
    return out;
}

template <class T>
T geometry_term(const T& nl, const T& nv, const T& alpha) {
    const T g1 = nv / (2.0 * (alpha + (T(1.0) - alpha) * nv));
    const T g2 = nl / (2.0 * (alpha + (T(1.0) - alpha) * nl));
    return g1 * g2;
}

template <class T>
T ndf(const T& nh, const T& alpha) {
    const T a2 = alpha * alpha;
    const T q = nh * nh * (a2 - 1.0) + 1.0;
    return a2 / (std::numbers::pi * q * q);
}

template <class T>
T roughness_alpha(const T& r, double floor) {
    const T a = r * r;
    return value_of(a) < floor ? T(floor) : a;
}

template <class T>
V3<T> f_specular(const V3<T>& c, const T& r, const T& m, const T& nl, const T& nv, const T& nh, const T& hv,
                 double alpha_floor) {
    const T alpha = roughness_alpha(r, alpha_floor);
    const V3<T> F = fresnel(hv, c, m);
    const T gd = geometry_term(nl, nv, alpha) * ndf(nh, alpha) / (4.0 * nv * nl);
    return {F[0] * gd, F[1] * gd, F[2] * gd};
}

}  // namespace bsdf

/// Full BSDF for unit n, v (towards the camera) and l (towards the light).
/// Zero when the light is below the surface (n·l <= 0).
template <class T>
BsdfValue<T> bsdf_eval(const V3<T>& n, const V3<T>& v, const V3<T>& l, const V3<T>& c, const T& r, const T& m,
                       const BsdfOptions& opt = {}) {
    using namespace bsdf;
    BsdfValue<T> out;
    const T nl_raw = dot3(n, l);
    if (!(value_of(nl_raw) > 0.0)) {
        for (int k = 0; k < 3; ++k) out.diffuse[k] = out.specular[k] = out.total[k] = T(0.0);
        return out;
    }
    const V3<T> h = half_vector(l, v, n);
    const T nl = clamp_cos(nl_raw);
    const T nv = clamp_cos(dot3(n, v));
    const T nh = clamp_cos(dot3(n, h));
    const T hv = clamp_cos(dot3(h, v));
    out.diffuse = f_diffuse(c, r, nl, nv, hv);
    if (opt.metallic_scales_diffuse)
        for (int k = 0; k < 3; ++k) out.diffuse[k] = out.diffuse[k] * (T(1.0) - m);
    out.specular = f_specular(c, r, m, nl, nv, nh, hv, opt.alpha_floor);
    for (int k = 0; k < 3; ++k) out.total[k] = out.diffuse[k] + out.specular[k];
    return out;
}

/// Graph op: inputs n, v, l, c [P,3] and r, m [P,1]; output total BSDF [P,3].
/// Backward uses dual numbers through the same bsdf_eval template.
ad::Var bsdf_graph(ad::Var n, ad::Var v, ad::Var l, ad::Var c, ad::Var r, ad::Var m, const BsdfOptions& opt = {});

}  // namespace invrend
