#pragma once

#include <vector>

#include "invrend/config.hpp"
#include "invrend/tensor.hpp"

namespace invrend {

/// Linear warmup from 0, then cosine decay to alpha_min · lr_base at max_steps.
double lr_at(std::size_t step, const TrainConfig& config);

class Adam {
public:
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    Adam() = default;
    explicit Adam(const std::vector<Tensor>& params);

    /// One bias-corrected update of every parameter.
    void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr);

    std::size_t steps() const { return t_; }
    std::vector<Tensor>& first_moment() { return m_; }
    std::vector<Tensor>& second_moment() { return v_; }
    const std::vector<Tensor>& first_moment() const { return m_; }
    const std::vector<Tensor>& second_moment() const { return v_; }
    void set_steps(std::size_t t) { t_ = t; }

private:
    std::vector<Tensor> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace invrend
