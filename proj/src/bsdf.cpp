#include "invrend/bsdf.hpp"

#include "invrend/kernels.hpp"

namespace invrend {

namespace {

constexpr int kInputs = 14;  // n, v, l, c (3 each), r, m
using D = Dual<kInputs>;

class BsdfOp final : public ad::CustomOp {
public:
    explicit BsdfOp(BsdfOptions opt) : opt_(opt) {}
    const char* name() const override { return "bsdf"; }

    void backward(std::span<const Tensor* const> in, const Tensor&, const Tensor& g,
                  std::span<Tensor* const> grad_in) const override {
        const std::size_t rows = g.rows();
        kernels::for_each_index(rows, [&](std::size_t p) {
            V3<D> vec[4];
            for (int a = 0; a < 4; ++a)
                for (int k = 0; k < 3; ++k) vec[a][k] = D::variable((*in[a])(p, k), 3 * a + k);
            const D r = D::variable((*in[4])(p, 0), 12);
            const D m = D::variable((*in[5])(p, 0), 13);
            const BsdfValue<D> out = bsdf_eval(vec[0], vec[1], vec[2], vec[3], r, m, opt_);
            std::array<double, kInputs> acc{};
            for (int ch = 0; ch < 3; ++ch) {
                const double gc = g(p, ch);
                for (int i = 0; i < kInputs; ++i) acc[i] += gc * out.total[ch].d[i];
            }
            for (int a = 0; a < 4; ++a)
                if (grad_in[a])
                    for (int k = 0; k < 3; ++k) (*grad_in[a])(p, k) += acc[3 * a + k];
            if (grad_in[4]) (*grad_in[4])(p, 0) += acc[12];
            if (grad_in[5]) (*grad_in[5])(p, 0) += acc[13];
        });
    }

    BsdfOptions opt_;
};

}  // namespace

ad::Var bsdf_graph(ad::Var n, ad::Var v, ad::Var l, ad::Var c, ad::Var r, ad::Var m, const BsdfOptions& opt) {
    const std::size_t rows = n.rows();
    for (ad::Var x : {v, l, c})
        if (x.rows() != rows || x.cols() != 3) throw ShapeError("bsdf: direction/albedo inputs must be [P,3]");
    if (n.cols() != 3 || r.rows() != rows || m.rows() != rows || r.cols() != 1 || m.cols() != 1)
        throw ShapeError("bsdf: roughness/metallic must be [P,1]");
    Tensor out(Shape{rows, 3});
    const Tensor &tn = n.value(), &tv = v.value(), &tl = l.value(), &tc = c.value(), &tr = r.value(), &tm = m.value();
    kernels::for_each_index(rows, [&](std::size_t p) {
        auto row3 = [p](const Tensor& t) { return V3<double>{t(p, 0), t(p, 1), t(p, 2)}; };
        const BsdfValue<double> b = bsdf_eval(row3(tn), row3(tv), row3(tl), row3(tc), tr(p, 0), tm(p, 0), opt);
        for (int k = 0; k < 3; ++k) out(p, k) = b.total[k];
    });
    return ad::custom({n, v, l, c, r, m}, std::move(out), std::make_shared<BsdfOp>(opt));
}

}  // namespace invrend
