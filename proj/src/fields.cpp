#include "invrend/fields.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace invrend {

using namespace ad;

namespace {

constexpr double kSharpnessScale = 10.0;

void fill_normal(Tensor& t, std::mt19937_64& rng, double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    for (double& v : t.data) v = dist(rng);
}

void fill_uniform(Tensor& t, std::mt19937_64& rng, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) v = dist(rng);
}

// Geometric init: the network starts close to |x| - radius. Only the raw
// coordinate columns of the encoding feed the first layer.
void init_sdf(const Mlp& net, ParamStore& store, std::mt19937_64& rng, double radius) {
    const std::size_t depth = net.layer_count();
    for (std::size_t i = 0; i < depth; ++i) {
        Tensor& w = store.value(net.weight_slot(i));
        Tensor& b = store.value(net.bias_slot(i));
        const double in = static_cast<double>(net.layer_in(i));
        const double out = static_cast<double>(net.layer_out(i));
        if (i + 1 == depth) {
            fill_normal(w, rng, std::sqrt(std::numbers::pi) / std::sqrt(in), 1e-4);
            std::fill(b.data.begin(), b.data.end(), -radius);
        } else {
            fill_normal(w, rng, 0.0, std::sqrt(2.0) / std::sqrt(out));
            if (i == 0)
                for (std::size_t r = 3; r < w.rows(); ++r)
                    for (std::size_t c = 0; c < w.cols(); ++c) w(r, c) = 0.0;
            std::fill(b.data.begin(), b.data.end(), 0.0);
        }
    }
}

void init_siren(const Mlp& net, ParamStore& store, std::mt19937_64& rng) {
    const double w0 = net.spec().omega0;
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        const double in = static_cast<double>(net.layer_in(i));
        fill_uniform(store.value(net.weight_slot(i)), rng, i == 0 ? 1.0 / in : std::sqrt(6.0 / in) / w0);
        fill_uniform(store.value(net.bias_slot(i)), rng, 1.0 / std::sqrt(in));
    }
}

void init_photon(const Mlp& net, ParamStore& store, std::mt19937_64& rng) {
    const std::size_t depth = net.layer_count();
    for (std::size_t i = 0; i < depth; ++i) {
        const double in = static_cast<double>(net.layer_in(i));
        Tensor& b = store.value(net.bias_slot(i));
        std::fill(b.data.begin(), b.data.end(), 0.0);
        if (i + 1 == depth) {
            fill_normal(store.value(net.weight_slot(i)), rng, 0.0, 0.1 / std::sqrt(in));
            // softplus(log(e - 1)) = 1: unit intensity at init.
            for (std::size_t c = 2; c < b.cols(); ++c) b.data[c] = std::log(std::numbers::e - 1.0);
        } else {
            fill_normal(store.value(net.weight_slot(i)), rng, 0.0, std::sqrt(2.0 / in));
        }
    }
}

}  // namespace

std::array<double, 3> spherical_to_unit(double rho, double phi) {
    return {std::sin(rho) * std::cos(phi), std::sin(rho) * std::sin(phi), std::cos(rho)};
}

Var positional_encoding(Var x, int octaves) {
    std::vector<Var> parts{x};
    for (int k = 0; k < octaves; ++k) {
        const Var xs = scale(x, std::ldexp(1.0, k));
        parts.push_back(sin(xs));
        parts.push_back(cos(xs));
    }
    return concat(parts);
}

Tensor positional_encoding(const Tensor& x, int octaves) {
    const std::size_t rows = x.rows(), cols = x.cols();
    const std::size_t width = cols * (1 + 2 * static_cast<std::size_t>(octaves));
    Tensor out(Shape{rows, width});
    for (std::size_t r = 0; r < rows; ++r) {
        double* o = out.data.data() + r * width;
        const double* xr = x.data.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) o[c] = xr[c];
        for (int k = 0; k < octaves; ++k) {
            const double f = std::ldexp(1.0, k);
            double* s = o + cols * (1 + 2 * static_cast<std::size_t>(k));
            for (std::size_t c = 0; c < cols; ++c) {
                s[c] = std::sin(f * xr[c]);
                s[cols + c] = std::cos(f * xr[c]);
            }
        }
    }
    return out;
}

Fields::Fields(const FieldsConfig& config, std::uint64_t seed) : config_(config) {
    const std::size_t f = config.feature_dim;
    const std::size_t pe = 3 + 6 * static_cast<std::size_t>(config.pe_octaves);
    sdf_ = Mlp({pe, 1 + f, config.sdf_depth, config.sdf_width, Activation::Relu, 0.0}, store_, "sdf");
    radiance_ = Mlp({9 + f, 3, config.radiance_depth, config.radiance_width, Activation::Sine, config.omega0}, store_,
                    "radiance");
    material_ = Mlp({6 + f, 5, config.material_depth, config.material_width, Activation::Sine, config.omega0}, store_,
                    "material");
    const std::size_t light_out = config.rgb_intensity ? 5 : 3;
    photon_ = Mlp({6 + f, light_out, config.photon_depth, config.photon_width, Activation::Relu, 0.0}, store_, "photon");
    s_slot_ = store_.add("sharpness", Tensor::scalar(std::log(config.init_sharpness) / kSharpnessScale));

    std::mt19937_64 rng(seed);
    init_sdf(sdf_, store_, rng, config.init_radius);
    init_siren(radiance_, store_, rng);
    init_siren(material_, store_, rng);
    init_photon(photon_, store_, rng);
}

double Fields::sharpness() const { return std::exp(kSharpnessScale * store_.value(s_slot_).item()); }

Var Fields::sharpness(const std::vector<Var>& bound) const {
    return exp(scale(bound[static_cast<std::size_t>(s_slot_)], kSharpnessScale));
}

SdfEval Fields::eval_sdf(const std::vector<Var>& bound, Var x, bool create_graph) const {
    const Var out = sdf_.forward(bound, positional_encoding(x, config_.pe_octaves));
    SdfEval e;
    e.sdf = slice_cols(out, 0, 1);
    e.feature = slice_cols(out, 1, 1 + config_.feature_dim);
    e.gradient = x.graph->grad(sum(e.sdf), x, create_graph);
    e.normal = normalize(e.gradient);
    return e;
}

Var Fields::eval_radiance(const std::vector<Var>& bound, Var x, Var n, Var v, Var feature) const {
    return sigmoid(radiance_.forward(bound, concat({x, n, v, feature})));
}

MaterialEval Fields::eval_material(const std::vector<Var>& bound, Var x, Var n, Var feature) const {
    const Var out = sigmoid(material_.forward(bound, concat({x, n, feature})));
    return {slice_cols(out, 0, 3), slice_cols(out, 3, 4), slice_cols(out, 4, 5)};
}

LightEval Fields::eval_photon(const std::vector<Var>& bound, Var x, Var n, Var feature) const {
    const Var out = photon_.forward(bound, concat({x, n, feature}));
    LightEval e;
    e.rho = scale(sigmoid(slice_cols(out, 0, 1)), std::numbers::pi);
    e.phi = scale(sigmoid(slice_cols(out, 1, 2)), 2.0 * std::numbers::pi);
    const Var sr = sin(e.rho);
    e.direction = concat({mul(sr, cos(e.phi)), mul(sr, sin(e.phi)), cos(e.rho)});
    const Var i = softplus(slice_cols(out, 2, out.cols()));
    e.intensity = config_.rgb_intensity ? i : concat({i, i, i});
    return e;
}

std::vector<double> Fields::sdf_values(const Tensor& x) const {
    const Tensor out = sdf_.eval(store_, positional_encoding(x, config_.pe_octaves));
    std::vector<double> f(out.rows());
    for (std::size_t r = 0; r < f.size(); ++r) f[r] = out(r, 0);
    return f;
}

}  // namespace invrend
