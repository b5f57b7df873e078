#pragma once

// Finite-difference check of the full training loss against the analytic
// gradient, with the sample depths, argmax indices and surface targets
// frozen so the loss is a smooth function of the parameters.

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "invrend/trainer.hpp"

namespace invrend::testing {

struct GradSample {
    int slot = 0;
    std::size_t index = 0;
    double analytic = 0.0, numeric = 0.0, rel = 0.0;
};

/// The first `count` foreground pixels of a view, in raster order from a
/// random start.
inline RayBatch foreground_batch(const SceneDataset& data, std::size_t view, std::size_t count, std::uint64_t seed) {
    const SceneView& v = data.views.at(view);
    const std::size_t npx = v.mask.size();
    std::mt19937_64 rng(seed);
    RayBatch b;
    b.L_gt = Tensor::matrix(count, 3);
    for (std::size_t k = 0, p = rng() % npx; k < npx && b.rays.size() < count; ++k, p = (p + 1) % npx) {
        if (v.mask[p] < 0.5) continue;
        const std::size_t r = b.rays.size();
        b.rays.push_back(ray_from_pixel(v.camera, static_cast<double>(p % v.camera.width),
                                        static_cast<double>(p / v.camera.width)));
        for (int c = 0; c < 3; ++c) b.L_gt(r, c) = v.rgb[3 * p + c];
        b.mask.push_back(1.0);
    }
    b.L_gt = Tensor(Shape{b.rays.size(), 3}, std::vector<double>(b.L_gt.data.begin(), b.L_gt.data.begin() + 3 * b.rays.size()));
    return b;
}

/// `count` (slot, entry) pairs taken round-robin over the four networks,
/// each a uniform slot of that network and then a uniform entry.
inline std::vector<std::pair<int, std::size_t>> pick_params(const ParamStore& ps, std::size_t count,
                                                            std::uint64_t seed) {
    const char* prefixes[] = {"sdf.", "radiance.", "material.", "photon."};
    std::vector<std::vector<int>> groups(4);
    for (int slot = 0; slot < static_cast<int>(ps.size()); ++slot)
        for (std::size_t g = 0; g < 4; ++g)
            if (ps.name(slot).rfind(prefixes[g], 0) == 0) groups[g].push_back(slot);
    std::mt19937_64 rng(seed);
    std::vector<std::pair<int, std::size_t>> out;
    for (std::size_t k = 0; k < count; ++k) {
        const auto& group = groups[k % 4];
        const int slot = group[rng() % group.size()];
        out.emplace_back(slot, rng() % ps.value(slot).numel());
    }
    return out;
}

/// Relative error |a - n| / max(|a|, |n|, floor) of the analytic gradient
/// against central differences with step h.
inline std::vector<GradSample> check_loss_gradient(Fields& fields, const RayBatch& batch, const Config& config,
                                                   std::size_t step,
                                                   const std::vector<std::pair<int, std::size_t>>& picks,
                                                   double h = 1e-5, double floor = 1e-6) {
    FrozenState frozen;
    evaluate_loss(fields, batch, config, step, false, nullptr, &frozen, nullptr);
    const LossEval base = evaluate_loss(fields, batch, config, step, true, &frozen, nullptr, nullptr);
    std::vector<GradSample> out;
    ParamStore& ps = fields.params();
    for (const auto& [slot, index] : picks) {
        GradSample s;
        s.slot = slot;
        s.index = index;
        double& p = ps.value(slot).data[index];
        const double orig = p;
        p = orig + h;
        const double fp = evaluate_loss(fields, batch, config, step, false, &frozen).loss.total;
        p = orig - h;
        const double fm = evaluate_loss(fields, batch, config, step, false, &frozen).loss.total;
        p = orig;
        s.analytic = base.grads[static_cast<std::size_t>(slot)].data[index];
        s.numeric = (fp - fm) / (2.0 * h);
        s.rel = std::fabs(s.analytic - s.numeric) / std::max({std::fabs(s.analytic), std::fabs(s.numeric), floor});
        out.push_back(s);
    }
    return out;
}

}  // namespace invrend::testing
