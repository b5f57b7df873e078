#include "invrend/mlp.hpp"

#include <cmath>

#include "invrend/kernels.hpp"

namespace invrend {

std::size_t parameter_count(const MlpSpec& spec) {
    std::size_t total = 0;
    for (std::size_t i = 0; i < spec.depth; ++i) {
        const std::size_t in = i == 0 ? spec.input_dim : spec.width;
        const std::size_t out = i + 1 == spec.depth ? spec.output_dim : spec.width;
        total += in * out + out;
    }
    return total;
}

int ParamStore::add(std::string name, Tensor value) {
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return static_cast<int>(values_.size()) - 1;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.numel();
    return n;
}

std::vector<ad::Var> ParamStore::bind(ad::Graph& graph) const {
    std::vector<ad::Var> out;
    out.reserve(values_.size());
    for (std::size_t i = 0; i < values_.size(); ++i) out.push_back(graph.parameter(values_[i], static_cast<int>(i)));
    return out;
}

std::vector<Tensor> slot_gradients(const ad::GradientMap& grads, const std::vector<ad::Var>& bound) {
    std::vector<Tensor> out;
    out.reserve(bound.size());
    for (const auto& v : bound) {
        auto it = grads.find(v.id);
        out.push_back(it != grads.end() ? it->second : Tensor(v.shape()));
    }
    return out;
}

Mlp::Mlp(const MlpSpec& spec, ParamStore& store, const std::string& prefix) : spec_(spec) {
    if (spec.depth < 1) throw std::invalid_argument("mlp depth must be at least 1");
    for (std::size_t i = 0; i < spec.depth; ++i) {
        const int w = store.add(prefix + ".l" + std::to_string(i) + ".weight", Tensor::matrix(layer_in(i), layer_out(i)));
        store.add(prefix + ".l" + std::to_string(i) + ".bias", Tensor::matrix(1, layer_out(i)));
        if (i == 0) first_slot_ = w;
    }
}

std::size_t Mlp::layer_in(std::size_t layer) const { return layer == 0 ? spec_.input_dim : spec_.width; }

std::size_t Mlp::layer_out(std::size_t layer) const {
    return layer + 1 == spec_.depth ? spec_.output_dim : spec_.width;
}

ad::Var Mlp::forward(const std::vector<ad::Var>& bound, ad::Var x) const {
    ad::Var h = x;
    for (std::size_t i = 0; i < spec_.depth; ++i) {
        h = ad::add(ad::matmul(h, bound[static_cast<std::size_t>(weight_slot(i))]),
                    bound[static_cast<std::size_t>(bias_slot(i))]);
        if (i + 1 == spec_.depth) break;
        h = spec_.activation == Activation::Relu ? ad::relu(h) : ad::sin(ad::scale(h, spec_.omega0));
    }
    return h;
}

Tensor Mlp::eval(const ParamStore& store, const Tensor& x) const {
    if (x.cols() != spec_.input_dim) throw ShapeError("mlp input has " + std::to_string(x.cols()) + " columns");
    const std::size_t rows = x.rows();
    Tensor h = x;
    for (std::size_t i = 0; i < spec_.depth; ++i) {
        const Tensor& w = store.value(weight_slot(i));
        const Tensor& b = store.value(bias_slot(i));
        const std::size_t in = layer_in(i), out = layer_out(i);
        Tensor next(Shape{rows, out});
        kernels::gemm(h.data.data(), w.data.data(), next.data.data(), rows, in, out);
        const bool last = i + 1 == spec_.depth;
        const bool relu = spec_.activation == Activation::Relu;
        const double w0 = spec_.omega0;
        kernels::for_each_index(rows, [&](std::size_t r) {
            double* row = next.data.data() + r * out;
            for (std::size_t c = 0; c < out; ++c) {
                double v = row[c] + b.data[c];
                if (!last) v = relu ? (v > 0.0 ? v : 0.0) : std::sin(w0 * v);
                row[c] = v;
            }
        });
        h = std::move(next);
    }
    return h;
}

}  // namespace invrend
