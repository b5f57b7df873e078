#include "invrend/losses.hpp"

#include <algorithm>

namespace invrend {

using namespace ad;

double total_color(double l_r, double l_surf, double l_vol, const LossWeights& w) {
    return l_r + w.lambda1 * l_surf + w.lambda2 * l_vol;
}

double hessian_weight_at(const LossWeights& w, std::size_t step, std::size_t max_steps) {
    const double end = w.hessian_decay_end * static_cast<double>(max_steps);
    if (end <= 0.0) return 0.0;
    return w.hessian * std::max(0.0, 1.0 - static_cast<double>(step) / end);
}

double total_loss(const LossBreakdown& b, const LossWeights& w, double hessian_weight) {
    return total_color(b.l_r, b.l_surf, b.l_vol, w) + w.eikonal * b.eikonal + hessian_weight * b.hessian +
           w.light * b.light + w.mask * b.mask;
}

ColorLossVars color_losses(Var L_r, Var L_surf, Var L_vol, Var L_gt, const Tensor& L_r_target,
                           const std::vector<double>& w_max) {
    const std::size_t rows = L_r.rows();
    if (rows == 0) throw std::invalid_argument("color_losses: empty batch");
    if (w_max.size() != rows) throw std::invalid_argument("color_losses: one w_max per ray");
    Graph& g = *L_r.graph;
    Tensor factor(Shape{rows, 1});
    for (std::size_t r = 0; r < rows; ++r) factor(r, 0) = 1.0 - w_max[r];
    ColorLossVars out;
    out.l_r = mean(abs(sub(L_r, L_gt)));
    out.l_surf = mean(mul(abs(sub(L_surf, g.constant(L_r_target))), g.constant(std::move(factor))));
    out.l_vol = mean(abs(sub(L_vol, L_gt)));
    return out;
}

Var eikonal_loss(Var gradients) { return mean(abs(add_scalar(neg(norm(gradients)), 1.0))); }

Var hessian_loss(Var hessian_entries) { return mean(abs(hessian_entries)); }

Var hessian_fd(Graph& graph, const std::function<Var(Var)>& gradient_at, const Tensor& points, double step) {
    std::vector<Var> cols;
    for (int k = 0; k < 3; ++k) {
        Tensor plus = points, minus = points;
        for (std::size_t r = 0; r < points.rows(); ++r) {
            plus(r, k) += step;
            minus(r, k) -= step;
        }
        const Var gp = gradient_at(graph.input(std::move(plus)));
        const Var gm = gradient_at(graph.input(std::move(minus)));
        cols.push_back(scale(sub(gp, gm), 0.5 / step));  // column k of the Hessian
    }
    return concat(cols);
}

Var hessian_exact(Graph& graph, Var gradient, Var x) {
    std::vector<Var> rows;
    for (std::size_t j = 0; j < 3; ++j) rows.push_back(graph.grad(sum(slice_cols(gradient, j, j + 1)), x, true));
    return concat(rows);
}

Var variance_scalar(Var q) { return mean(variance(q)); }

Var light_variance_loss(Var x, Var n, Var l, Var intensity, const LossWeights& w) {
    Graph& g = *x.graph;
    if (x.rows() < 2) return g.constant(Tensor::scalar(0.0));
    const Var vx = variance_scalar(x), vn = variance_scalar(n), vl = variance_scalar(l),
              vi = variance_scalar(intensity);
    return add(add(scale(abs(sub(vx, vi)), w.lambda3), scale(abs(sub(vn, vl)), w.lambda4)),
               scale(abs(sub(vx, vl)), w.lambda5));
}

Var mask_loss(Var w_sum, const std::vector<double>& mask) {
    const std::size_t rows = w_sum.rows();
    if (mask.size() != rows) throw std::invalid_argument("mask_loss: one mask value per ray");
    Graph& g = *w_sum.graph;
    Tensor m(Shape{rows, 1});
    for (std::size_t r = 0; r < rows; ++r) m(r, 0) = mask[r];
    const Var mv = g.constant(m);
    for (double& v : m.data) v = 1.0 - v;
    const Var inv = g.constant(std::move(m));
    const double eps = 1e-6;
    const Var p = clamp(w_sum, eps, 1.0 - eps);
    return neg(mean(add(mul(mv, log(p)), mul(inv, log(add_scalar(neg(p), 1.0))))));
}

}  // namespace invrend
