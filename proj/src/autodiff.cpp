#include <algorithm>
#include <cmath>
#include <optional>

#include "invrend/graph.hpp"
#include "invrend/kernels.hpp"
#include "ops_common.hpp"

namespace invrend::ad {

namespace {

bool is_scalar(const Tensor& t) { return t.numel() == 1; }

// ---------------------------------------------------------------------------
// Numeric backward
// ---------------------------------------------------------------------------

class GradStore {
public:
    explicit GradStore(std::size_t n) : grads_(n) {}

    bool has(int id) const { return grads_[static_cast<std::size_t>(id)].has_value(); }
    Tensor& at(int id) { return *grads_[static_cast<std::size_t>(id)]; }
    std::optional<Tensor> take(int id) { return std::exchange(grads_[static_cast<std::size_t>(id)], std::nullopt); }

    void add(int id, Tensor&& t) {
        auto& slot = grads_[static_cast<std::size_t>(id)];
        if (!slot) {
            slot = std::move(t);
            return;
        }
        double* d = slot->data.data();
        const double* s = t.data.data();
        kernels::for_each_index(t.numel(), [&](std::size_t i) { d[i] += s[i]; });
    }

private:
    std::vector<std::optional<Tensor>> grads_;
};

// g has the broadcast output shape; returns g reduced to the shape of `in`.
Tensor reduce_like(const Tensor& g, const Tensor& in) {
    if (g.rows() == in.rows() && g.cols() == in.cols()) return Tensor(in.shape, g.data);
    return detail::reduce_to(g, in.shape);
}

template <class F>
Tensor map2(const Tensor& g, const Tensor& x, F&& f) {
    Tensor out(x.shape);
    const double* gs = g.data.data();
    const double* xs = x.data.data();
    double* o = out.data.data();
    kernels::for_each_index(x.numel(), [&](std::size_t i) { o[i] = f(gs[i], xs[i]); });
    return out;
}

void numeric_node_backward(const Node& n, const std::vector<Node>& nodes, const Tensor& g, GradStore& store) {
    auto in = [&](std::size_t i) -> const Node& { return nodes[static_cast<std::size_t>(n.inputs[i])]; };
    auto need = [&](std::size_t i) { return in(i).requires_grad; };
    auto give = [&](std::size_t i, Tensor&& t) { store.add(n.inputs[i], std::move(t)); };

    switch (n.op) {
        case Op::Leaf: return;
        case Op::Add:
        case Op::Sub: {
            if (need(0)) give(0, reduce_like(g, in(0).value));
            if (need(1)) {
                Tensor t = reduce_like(g, in(1).value);
                if (n.op == Op::Sub)
                    for (double& v : t.data) v = -v;
                give(1, std::move(t));
            }
            return;
        }
        case Op::Mul:
        case Op::Div:
        case Op::Minimum:
        case Op::Maximum: {
            const Tensor& a = in(0).value;
            const Tensor& b = in(1).value;
            detail::BroadcastView bv(a, b, op_name(n.op));
            const std::size_t rows = bv.rows, cols = bv.cols;
            for (std::size_t side = 0; side < 2; ++side) {
                if (!need(side)) continue;
                Tensor full(n.value.shape);
                kernels::for_each_index(rows, [&](std::size_t r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        const double x = bv.a_at(a, r, c), y = bv.b_at(b, r, c);
                        const double gv = g.data[r * cols + c];
                        double d = 0.0;
                        switch (n.op) {
                            case Op::Mul: d = side == 0 ? gv * y : gv * x; break;
                            case Op::Div: d = side == 0 ? gv / y : -gv * x / (y * y); break;
                            case Op::Minimum: d = ((x <= y) == (side == 0)) ? gv : 0.0; break;
                            default: d = ((x >= y) == (side == 0)) ? gv : 0.0; break;
                        }
                        full.data[r * cols + c] = d;
                    }
                });
                give(side, reduce_like(full, side == 0 ? a : b));
            }
            return;
        }
        case Op::Neg: give(0, map2(g, g, [](double gv, double) { return -gv; })); return;
        case Op::Scale: {
            const double c = n.a;
            give(0, map2(g, g, [c](double gv, double) { return c * gv; }));
            return;
        }
        case Op::AddScalar: give(0, Tensor(in(0).value.shape, g.data)); return;
        case Op::Pow: {
            const double p = n.a;
            if (p == 2.0)
                give(0, map2(g, in(0).value, [](double gv, double x) { return 2.0 * gv * x; }));
            else
                give(0, map2(g, in(0).value, [p](double gv, double x) { return gv * p * std::pow(x, p - 1.0); }));
            return;
        }
        case Op::Exp: give(0, map2(g, n.value, [](double gv, double y) { return gv * y; })); return;
        case Op::Log: give(0, map2(g, in(0).value, [](double gv, double x) { return gv / x; })); return;
        case Op::Sin: give(0, map2(g, in(0).value, [](double gv, double x) { return gv * std::cos(x); })); return;
        case Op::Cos: give(0, map2(g, in(0).value, [](double gv, double x) { return -gv * std::sin(x); })); return;
        case Op::Sigmoid:
            give(0, map2(g, n.value, [](double gv, double y) { return gv * y * (1.0 - y); }));
            return;
        case Op::Softplus:
            give(0, map2(g, in(0).value, [](double gv, double x) { return gv * detail::sigmoid(x); }));
            return;
        case Op::Relu: give(0, map2(g, in(0).value, [](double gv, double x) { return x > 0.0 ? gv : 0.0; })); return;
        case Op::Abs:
            give(0, map2(g, in(0).value,
                         [](double gv, double x) { return x > 0.0 ? gv : (x < 0.0 ? -gv : 0.0); }));
            return;
        case Op::Step:
        case Op::Sign: return;
        case Op::Clamp: {
            const double lo = n.a, hi = n.b;
            give(0, map2(g, in(0).value, [lo, hi](double gv, double x) { return (x >= lo && x <= hi) ? gv : 0.0; }));
            return;
        }
        case Op::MatMul: {
            const Tensor& a = in(0).value;  // [M,K]
            const Tensor& b = in(1).value;  // [K,N]
            const std::size_t m = a.rows(), k = a.cols(), nn = b.cols();
            if (need(0)) {
                Tensor t(Shape{m, k});
                kernels::gemm_nt(g.data.data(), b.data.data(), t.data.data(), m, nn, k);
                give(0, std::move(t));
            }
            if (need(1)) {
                Tensor t(Shape{k, nn});
                kernels::gemm_tn(a.data.data(), g.data.data(), t.data.data(), k, m, nn);
                give(1, std::move(t));
            }
            return;
        }
        case Op::MatMulNT: {
            const Tensor& a = in(0).value;  // [M,K]
            const Tensor& b = in(1).value;  // [N,K]
            const std::size_t m = a.rows(), k = a.cols(), nn = b.rows();
            if (need(0)) {
                Tensor t(Shape{m, k});
                kernels::gemm(g.data.data(), b.data.data(), t.data.data(), m, nn, k);
                give(0, std::move(t));
            }
            if (need(1)) {
                Tensor t(Shape{nn, k});
                kernels::gemm_tn(g.data.data(), a.data.data(), t.data.data(), nn, m, k);
                give(1, std::move(t));
            }
            return;
        }
        case Op::MatMulTN: {
            const Tensor& a = in(0).value;  // [K,M]
            const Tensor& b = in(1).value;  // [K,N]
            const std::size_t k = a.rows(), m = a.cols(), nn = b.cols();
            if (need(0)) {
                Tensor t(Shape{k, m});
                kernels::gemm_nt(b.data.data(), g.data.data(), t.data.data(), k, nn, m);
                give(0, std::move(t));
            }
            if (need(1)) {
                Tensor t(Shape{k, nn});
                kernels::gemm(a.data.data(), g.data.data(), t.data.data(), k, m, nn);
                give(1, std::move(t));
            }
            return;
        }
        case Op::Sum: give(0, Tensor(in(0).value.shape, g.item())); return;
        case Op::Mean:
            give(0, Tensor(in(0).value.shape, g.item() / static_cast<double>(in(0).value.numel())));
            return;
        case Op::SumTo: give(0, detail::expand_to(g, in(0).value.shape)); return;
        case Op::BroadcastTo: give(0, detail::reduce_to(g, in(0).value.shape)); return;
        case Op::Variance: {
            const Tensor& x = in(0).value;
            const std::size_t rows = x.rows(), cols = x.cols();
            Tensor t(x.shape);
            for (std::size_t c = 0; c < cols; ++c) {
                double mu = 0.0;
                for (std::size_t r = 0; r < rows; ++r) mu += x(r, c);
                mu /= static_cast<double>(rows);
                const double f = 2.0 * g.data[c] / static_cast<double>(rows);
                for (std::size_t r = 0; r < rows; ++r) t.data[r * cols + c] = f * (x(r, c) - mu);
            }
            give(0, std::move(t));
            return;
        }
        case Op::RowDot: {
            for (std::size_t side = 0; side < 2; ++side) {
                if (!need(side)) continue;
                const Tensor& other = in(1 - side).value;
                const std::size_t rows = other.rows(), cols = other.cols();
                Tensor t(in(side).value.shape);
                kernels::for_each_index(rows, [&](std::size_t r) {
                    for (std::size_t c = 0; c < cols; ++c) t.data[r * cols + c] = g.data[r] * other.data[r * cols + c];
                });
                give(side, std::move(t));
            }
            return;
        }
        case Op::RowNorm: {
            const Tensor& x = in(0).value;
            const std::size_t rows = x.rows(), cols = x.cols();
            Tensor t(x.shape);
            kernels::for_each_index(rows, [&](std::size_t r) {
                const double y = n.value.data[r];
                const double f = y > 0.0 ? g.data[r] / y : 0.0;
                for (std::size_t c = 0; c < cols; ++c) t.data[r * cols + c] = f * x.data[r * cols + c];
            });
            give(0, std::move(t));
            return;
        }
        case Op::Concat: {
            const std::size_t rows = g.rows(), total = g.cols();
            std::size_t off = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                const std::size_t w = in(i).value.cols();
                if (need(i)) {
                    Tensor t(in(i).value.shape);
                    for (std::size_t r = 0; r < rows; ++r)
                        std::copy_n(g.data.data() + r * total + off, w, t.data.data() + r * w);
                    give(i, std::move(t));
                }
                off += w;
            }
            return;
        }
        case Op::SliceCols: {
            const Tensor& x = in(0).value;
            const std::size_t rows = x.rows(), cols = x.cols(), w = n.i1 - n.i0;
            Tensor t(x.shape);
            for (std::size_t r = 0; r < rows; ++r)
                std::copy_n(g.data.data() + r * w, w, t.data.data() + r * cols + n.i0);
            give(0, std::move(t));
            return;
        }
        case Op::PadCols: {
            const Tensor& x = in(0).value;
            const std::size_t rows = x.rows(), w = x.cols(), total = n.i0, off = n.i1;
            Tensor t(x.shape);
            for (std::size_t r = 0; r < rows; ++r)
                std::copy_n(g.data.data() + r * total + off, w, t.data.data() + r * w);
            give(0, std::move(t));
            return;
        }
        case Op::Reshape: give(0, Tensor(in(0).value.shape, g.data)); return;
        case Op::IndexRows: {
            const Tensor& x = in(0).value;
            const std::size_t cols = x.cols();
            Tensor t(x.shape);
            const auto& idx = *n.index;
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (std::size_t c = 0; c < cols; ++c) t.data[idx[i] * cols + c] += g.data[i * cols + c];
            give(0, std::move(t));
            return;
        }
        case Op::ScatterRows: {
            const Tensor& x = in(0).value;
            const std::size_t cols = x.cols();
            Tensor t(x.shape);
            const auto& idx = *n.index;
            for (std::size_t i = 0; i < idx.size(); ++i)
                std::copy_n(g.data.data() + idx[i] * cols, cols, t.data.data() + i * cols);
            give(0, std::move(t));
            return;
        }
        case Op::SegmentSum: give(0, detail::repeat_rows(g, n.i0)); return;
        case Op::RepeatRows: {
            const Tensor& x = in(0).value;
            Tensor t(x.shape);
            kernels::segment_sum(g.data.data(), t.data.data(), x.rows(), n.i0, x.cols());
            give(0, std::move(t));
            return;
        }
        case Op::CumsumExcl: give(0, detail::cumsum_exclusive(g, true)); return;
        case Op::RevCumsumExcl: give(0, detail::cumsum_exclusive(g, false)); return;
        case Op::Custom: {
            std::vector<const Tensor*> ins;
            std::vector<Tensor> outs;
            outs.reserve(n.inputs.size());
            std::vector<Tensor*> gin(n.inputs.size(), nullptr);
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                ins.push_back(&in(i).value);
                outs.emplace_back(need(i) ? Tensor(in(i).value.shape) : Tensor());
            }
            for (std::size_t i = 0; i < n.inputs.size(); ++i)
                if (need(i)) gin[i] = &outs[i];
            n.custom->backward(ins, n.value, g, gin);
            for (std::size_t i = 0; i < n.inputs.size(); ++i)
                if (need(i)) give(i, std::move(outs[i]));
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Differentiable vector-Jacobian products
// ---------------------------------------------------------------------------

Var vjp_var(Graph& gr, int id, Var g, std::size_t which) {
    // Copy what we need; recording new nodes can reallocate node storage.
    const Node& nref = gr.node(id);
    const Op op = nref.op;
    const std::vector<int> inputs = nref.inputs;
    const double pa = nref.a, pb = nref.b;
    const std::size_t i0 = nref.i0, i1 = nref.i1;
    const auto index = nref.index;

    Var out{&gr, id};
    auto in = [&](std::size_t i) { return Var{&gr, inputs[i]}; };
    auto reduce = [&](Var t, std::size_t i) {
        const Shape ts = t.shape();
        const Shape is = in(i).shape();
        const Tensor& iv = in(i).value();
        if (t.rows() == iv.rows() && t.cols() == iv.cols()) {
            if (ts == is) return t;
            return reshape(t, is);
        }
        return sum_to(t, is);
    };

    switch (op) {
        case Op::Leaf: break;
        case Op::Add: return reduce(g, which);
        case Op::Sub: return which == 0 ? reduce(g, 0) : reduce(neg(g), 1);
        case Op::Mul: return reduce(mul(g, in(1 - which)), which);
        case Op::Div:
            if (which == 0) return reduce(div(g, in(1)), 0);
            return reduce(neg(div(mul(g, in(0)), mul(in(1), in(1)))), 1);
        case Op::Minimum:
        case Op::Maximum: {
            const Tensor& a = in(0).value();
            const Tensor& b = in(1).value();
            detail::BroadcastView bv(a, b, op_name(op));
            Tensor mask(bv.shape);
            for (std::size_t r = 0; r < bv.rows; ++r)
                for (std::size_t c = 0; c < bv.cols; ++c) {
                    const double x = bv.a_at(a, r, c), y = bv.b_at(b, r, c);
                    const bool pick_a = op == Op::Minimum ? x <= y : x >= y;
                    mask.data[r * bv.cols + c] = (pick_a == (which == 0)) ? 1.0 : 0.0;
                }
            return reduce(mul(g, gr.constant(std::move(mask))), which);
        }
        case Op::Neg: return neg(g);
        case Op::Scale: return scale(g, pa);
        case Op::AddScalar: return g;
        case Op::Pow:
            if (pa == 1.0) return g;
            if (pa == 2.0) return mul(g, scale(in(0), 2.0));
            return mul(g, scale(pow(in(0), pa - 1.0), pa));
        case Op::Exp: return mul(g, out);
        case Op::Log: return div(g, in(0));
        case Op::Sin: return mul(g, cos(in(0)));
        case Op::Cos: return neg(mul(g, sin(in(0))));
        case Op::Sigmoid: return mul(g, mul(out, add_scalar(neg(out), 1.0)));
        case Op::Softplus: return mul(g, sigmoid(in(0)));
        case Op::Relu: return mul(g, step(in(0)));
        case Op::Abs: return mul(g, sign(in(0)));
        case Op::Step:
        case Op::Sign: break;
        case Op::Clamp: {
            const Tensor& x = in(0).value();
            Tensor mask(x.shape);
            for (std::size_t i = 0; i < x.numel(); ++i) mask.data[i] = (x.data[i] >= pa && x.data[i] <= pb) ? 1.0 : 0.0;
            return mul(g, gr.constant(std::move(mask)));
        }
        case Op::MatMul: return which == 0 ? matmul_nt(g, in(1)) : matmul_tn(in(0), g);
        case Op::MatMulNT: return which == 0 ? matmul(g, in(1)) : matmul_tn(g, in(0));
        case Op::MatMulTN: return which == 0 ? matmul_nt(in(1), g) : matmul(in(0), g);
        case Op::Sum: return broadcast_to(g, Shape(in(0).shape()));
        case Op::Mean:
            return broadcast_to(scale(g, 1.0 / static_cast<double>(in(0).value().numel())), Shape(in(0).shape()));
        case Op::SumTo: return broadcast_to(g, Shape(in(0).shape()));
        case Op::BroadcastTo: return sum_to(g, Shape(in(0).shape()));
        case Op::Variance: {
            Var x = in(0);
            const double rows = static_cast<double>(x.rows());
            Var mu = scale(sum_to(x, Shape{1, x.cols()}), 1.0 / rows);
            return scale(mul(sub(x, mu), g), 2.0 / rows);
        }
        case Op::RowDot: return mul(g, in(1 - which));
        case Op::RowNorm: {
            Graph& graph = gr;
            Var safe = maximum(out, graph.constant(Tensor::scalar(1e-300)));
            return mul(div(g, safe), in(0));
        }
        case Op::Concat: {
            std::size_t off = 0;
            for (std::size_t i = 0; i < which; ++i) off += in(i).cols();
            return slice_cols(g, off, off + in(which).cols());
        }
        case Op::SliceCols: return pad_cols(g, in(0).cols(), i0);
        case Op::PadCols: return slice_cols(g, i1, i1 + in(0).cols());
        case Op::Reshape: return reshape(g, Shape(in(0).shape()));
        case Op::IndexRows: return scatter_rows(g, index, in(0).rows());
        case Op::ScatterRows: return index_rows(g, index);
        case Op::SegmentSum: return repeat_rows(g, i0);
        case Op::RepeatRows: return segment_sum(g, i0);
        case Op::CumsumExcl: return rev_cumsum_exclusive(g);
        case Op::RevCumsumExcl: return cumsum_exclusive(g);
        case Op::Custom:
            throw std::logic_error(std::string("op '") + gr.node(id).custom->name() +
                                   "' does not support differentiable gradients");
    }
    return Var{};
}

}  // namespace

GradientMap Graph::backward(Var loss) {
    check_owned(loss, "backward");
    if (!is_scalar(loss.value())) throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    GradStore store(nodes_.size());
    if (nodes_[static_cast<std::size_t>(loss.id)].requires_grad) {
        store.add(loss.id, Tensor(loss.shape(), 1.0));
        for (int id = loss.id; id >= 0; --id) {
            const Node& n = nodes_[static_cast<std::size_t>(id)];
            if (n.op == Op::Leaf || !store.has(id)) continue;
            std::optional<Tensor> g = store.take(id);
            numeric_node_backward(n, nodes_, *g, store);
        }
    }
    GradientMap out;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const Node& n = nodes_[id];
        if (n.op != Op::Leaf || !n.requires_grad) continue;
        const int iid = static_cast<int>(id);
        if (store.has(iid)) out.emplace(iid, std::move(*store.take(iid)));
        else out.emplace(iid, Tensor(n.value.shape));
    }
    return out;
}

Var Graph::grad(Var output, Var input, bool create_graph) {
    check_owned(output, "grad");
    check_owned(input, "grad");
    if (!is_scalar(output.value())) throw ShapeError("grad: output must be scalar");

    // Nodes whose value depends on `input`.
    std::vector<char> dep(nodes_.size(), 0);
    dep[static_cast<std::size_t>(input.id)] = 1;
    for (std::size_t id = static_cast<std::size_t>(input.id) + 1; id <= static_cast<std::size_t>(output.id); ++id) {
        const Node& n = nodes_[id];
        if (n.op == Op::Step || n.op == Op::Sign) continue;
        for (int in : n.inputs)
            if (dep[static_cast<std::size_t>(in)]) {
                dep[id] = 1;
                break;
            }
    }
    if (output.id < input.id || !dep[static_cast<std::size_t>(output.id)])
        throw std::invalid_argument("grad: input is not an ancestor of output");

    if (!create_graph) {
        GradStore store(nodes_.size());
        store.add(output.id, Tensor(output.shape(), 1.0));
        for (int id = output.id; id > input.id; --id) {
            if (!dep[static_cast<std::size_t>(id)] || !store.has(id)) continue;
            std::optional<Tensor> g = store.take(id);
            // Only propagate along the dependency path.
            const Node& n = nodes_[static_cast<std::size_t>(id)];
            GradStore local(nodes_.size());
            numeric_node_backward(n, nodes_, *g, local);
            for (int in : n.inputs)
                if (dep[static_cast<std::size_t>(in)] && local.has(in)) store.add(in, std::move(*local.take(in)));
        }
        Tensor result = store.has(input.id) ? std::move(*store.take(input.id)) : Tensor(input.shape());
        return constant(std::move(result));
    }

    std::vector<Var> gv(static_cast<std::size_t>(output.id) + 1);
    gv[static_cast<std::size_t>(output.id)] = constant(Tensor(output.shape(), 1.0));
    for (int id = output.id; id > input.id; --id) {
        const std::size_t uid = static_cast<std::size_t>(id);
        if (!dep[uid] || !gv[uid].valid()) continue;
        const std::vector<int> ins = nodes_[uid].inputs;
        for (std::size_t i = 0; i < ins.size(); ++i) {
            const std::size_t in = static_cast<std::size_t>(ins[i]);
            if (!dep[in]) continue;
            Var contrib = vjp_var(*this, id, gv[uid], i);
            if (!contrib.valid()) continue;
            gv[in] = gv[in].valid() ? add(gv[in], contrib) : contrib;
        }
    }
    Var result = gv[static_cast<std::size_t>(input.id)];
    if (!result.valid()) return constant(Tensor(input.shape()));
    return result;
}

}  // namespace invrend::ad
