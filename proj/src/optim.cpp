#include "invrend/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace invrend {

double lr_at(std::size_t step, const TrainConfig& config) {
    const double base = config.lr_base;
    if (step < config.warmup_steps) return base * static_cast<double>(step) / static_cast<double>(config.warmup_steps);
    const double span = static_cast<double>(config.max_steps) - static_cast<double>(config.warmup_steps);
    double progress = span > 0.0 ? (static_cast<double>(step) - static_cast<double>(config.warmup_steps)) / span : 1.0;
    progress = std::min(progress, 1.0);
    const double a = config.alpha_min;
    return base * ((std::cos(std::numbers::pi * progress) + 1.0) * 0.5 * (1.0 - a) + a);
}

Adam::Adam(const std::vector<Tensor>& params) {
    for (const Tensor& p : params) {
        m_.emplace_back(p.shape, 0.0);
        v_.emplace_back(p.shape, 0.0);
    }
}

void Adam::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("Adam: parameter count changed");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (std::size_t s = 0; s < params.size(); ++s) {
        Tensor& p = params[s];
        const Tensor& g = grads[s];
        if (g.numel() != p.numel() || m_[s].numel() != p.numel()) throw std::invalid_argument("Adam: shape mismatch");
        for (std::size_t i = 0; i < p.numel(); ++i) {
            m_[s].data[i] = beta1 * m_[s].data[i] + (1.0 - beta1) * g.data[i];
            v_[s].data[i] = beta2 * v_[s].data[i] + (1.0 - beta2) * g.data[i] * g.data[i];
            const double mh = m_[s].data[i] / c1, vh = v_[s].data[i] / c2;
            p.data[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
}

}  // namespace invrend
