#pragma once

#include <functional>
#include <string>
#include <vector>

#include "invrend/graph.hpp"

namespace invrend {

struct LossWeights {
    double lambda1 = 3e-4;  // surface term
    double lambda2 = 1e-4;  // volume term
    double eikonal = 0.1;
    double hessian = 5e-4;
    /// The Hessian weight decays linearly to 0 at this fraction of training.
    double hessian_decay_end = 0.5;
    std::string hessian_mode = "fd";  // "fd" or "exact"
    double hessian_step = 1e-4;
    double light = 1e-4;
    double lambda3 = 1.0;  // |var(x) - var(I)|
    double lambda4 = 1.0;  // |var(n) - var(l)|
    double lambda5 = 0.1;  // |var(x) - var(l)|
    double mask = 0.1;
};

struct LossBreakdown {
    double l_r = 0.0, l_surf = 0.0, l_vol = 0.0;
    double eikonal = 0.0, hessian = 0.0, light = 0.0, mask = 0.0;
    double total = 0.0;
};

double total_color(double l_r, double l_surf, double l_vol, const LossWeights& w);

/// Hessian weight at a training step (linear decay).
double hessian_weight_at(const LossWeights& w, std::size_t step, std::size_t max_steps);

/// Weighted sum of every component; `hessian_weight` is the scheduled value.
double total_loss(const LossBreakdown& b, const LossWeights& w, double hessian_weight);

struct ColorLossVars {
    ad::Var l_r, l_surf, l_vol;
};

/// Mean-L1 colour losses over a batch of foreground rays [R,3]. `L_r_target`
/// is the pseudo ground truth for the surface term and `w_max` the per-ray
/// surface confidence; both enter as constants.
ColorLossVars color_losses(ad::Var L_r, ad::Var L_surf, ad::Var L_vol, ad::Var L_gt, const Tensor& L_r_target,
                           const std::vector<double>& w_max);

/// mean |1 - |g||
ad::Var eikonal_loss(ad::Var gradients);

/// mean of elementwise |H|
ad::Var hessian_loss(ad::Var hessian_entries);

/// Hessian rows [Q,9] at `points` by central differences of `gradient_at`,
/// which must return d f / d x [Q,3] for a fresh graph input.
ad::Var hessian_fd(ad::Graph& graph, const std::function<ad::Var(ad::Var)>& gradient_at, const Tensor& points,
                   double step);

/// Hessian rows [Q,9] by differentiating each gradient component again.
/// `x` must be the graph input that `gradient` was taken with respect to.
ad::Var hessian_exact(ad::Graph& graph, ad::Var gradient, ad::Var x);

/// Mean of per-column population variances.
ad::Var variance_scalar(ad::Var q);

/// λ3 |var(x) - var(I)| + λ4 |var(n) - var(l)| + λ5 |var(x) - var(l)|; 0 for fewer than two points.
ad::Var light_variance_loss(ad::Var x, ad::Var n, ad::Var l, ad::Var intensity, const LossWeights& w);

/// Mean BCE of w_sum (clamped to [1e-6, 1 - 1e-6]) against a {0,1} mask.
ad::Var mask_loss(ad::Var w_sum, const std::vector<double>& mask);

}  // namespace invrend
