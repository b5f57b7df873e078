#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "invrend/graph.hpp"
#include "invrend/tensor.hpp"

namespace invrend {

enum class Activation { Relu, Sine };

/// Fully connected network. `depth` counts linear layers, so depth 1 is a
/// single affine map and depth 8 has 7 hidden activations.
struct MlpSpec {
    std::size_t input_dim = 3;
    std::size_t output_dim = 1;
    std::size_t depth = 8;
    std::size_t width = 256;
    Activation activation = Activation::Relu;
    double omega0 = 30.0;  // sine networks only
};

std::size_t parameter_count(const MlpSpec& spec);

/// Flat list of named trainable tensors. Slots are stable once added.
class ParamStore {
public:
    int add(std::string name, Tensor value);

    std::size_t size() const { return values_.size(); }
    std::size_t scalar_count() const;
    const std::string& name(int slot) const { return names_.at(static_cast<std::size_t>(slot)); }
    Tensor& value(int slot) { return values_.at(static_cast<std::size_t>(slot)); }
    const Tensor& value(int slot) const { return values_.at(static_cast<std::size_t>(slot)); }
    std::vector<Tensor>& values() { return values_; }
    const std::vector<Tensor>& values() const { return values_; }

    /// Records every parameter as a trainable leaf; the result is indexed by slot.
    std::vector<ad::Var> bind(ad::Graph& graph) const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

/// Gradient per slot (zeros for slots the loss does not reach).
std::vector<Tensor> slot_gradients(const ad::GradientMap& grads, const std::vector<ad::Var>& bound);

class Mlp {
public:
    Mlp() = default;
    /// Registers zero-initialised weights ([in, out]) and biases ([1, out]).
    Mlp(const MlpSpec& spec, ParamStore& store, const std::string& prefix);

    const MlpSpec& spec() const { return spec_; }
    std::size_t layer_count() const { return spec_.depth; }
    std::size_t layer_in(std::size_t layer) const;
    std::size_t layer_out(std::size_t layer) const;
    int weight_slot(std::size_t layer) const { return first_slot_ + 2 * static_cast<int>(layer); }
    int bias_slot(std::size_t layer) const { return weight_slot(layer) + 1; }

    ad::Var forward(const std::vector<ad::Var>& bound, ad::Var x) const;
    /// Value-only evaluation; same arithmetic as forward().
    Tensor eval(const ParamStore& store, const Tensor& x) const;

private:
    MlpSpec spec_;
    int first_slot_ = -1;
};

}  // namespace invrend
