#include "invrend/graph.hpp"

#include <algorithm>
#include <cmath>

#include "invrend/kernels.hpp"
#include "ops_common.hpp"

namespace invrend::ad {

using detail::BroadcastView;

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Minimum: return "minimum";
        case Op::Maximum: return "maximum";
        case Op::Neg: return "neg";
        case Op::Scale: return "scale";
        case Op::AddScalar: return "add_scalar";
        case Op::Pow: return "pow";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Sigmoid: return "sigmoid";
        case Op::Softplus: return "softplus";
        case Op::Relu: return "relu";
        case Op::Abs: return "abs";
        case Op::Step: return "step";
        case Op::Sign: return "sign";
        case Op::Clamp: return "clamp";
        case Op::MatMul: return "matmul";
        case Op::MatMulNT: return "matmul_nt";
        case Op::MatMulTN: return "matmul_tn";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::SumTo: return "sum_to";
        case Op::BroadcastTo: return "broadcast_to";
        case Op::Variance: return "variance";
        case Op::RowDot: return "dot";
        case Op::RowNorm: return "norm";
        case Op::Concat: return "concat";
        case Op::SliceCols: return "slice_cols";
        case Op::PadCols: return "pad_cols";
        case Op::Reshape: return "reshape";
        case Op::IndexRows: return "index_rows";
        case Op::ScatterRows: return "scatter_rows";
        case Op::SegmentSum: return "segment_sum";
        case Op::RepeatRows: return "repeat_rows";
        case Op::CumsumExcl: return "cumsum_exclusive";
        case Op::RevCumsumExcl: return "rev_cumsum_exclusive";
        case Op::Custom: return "custom";
    }
    return "?";
}

const Tensor& Var::value() const { return graph->node(id).value; }
const Shape& Var::shape() const { return graph->node(id).value.shape; }
bool Var::requires_grad() const { return graph->node(id).requires_grad; }

void Graph::check_owned(Var v, const char* what) const {
    if (v.graph != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw std::invalid_argument(std::string(what) + ": node does not belong to this graph");
}

Var Graph::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    return record(std::move(n));
}

Var Graph::input(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    return record(std::move(n));
}

Var Graph::parameter(Tensor value, int slot) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    n.param = slot;
    return record(std::move(n));
}

Var Graph::record(Node n) {
    if (n.op != Op::Leaf && n.op != Op::Step && n.op != Op::Sign) {
        for (int in : n.inputs)
            if (nodes_[static_cast<std::size_t>(in)].requires_grad) n.requires_grad = true;
    }
    if (!n.value.all_finite()) {
        std::string msg = std::string("non-finite value produced by op '") +
                          (n.op == Op::Custom && n.custom ? n.custom->name() : op_name(n.op)) + "'";
        throw NumericError(msg);
    }
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size() - 1)};
}

namespace {

Graph& owner(std::initializer_list<Var> vars) {
    Graph* g = nullptr;
    for (const Var& v : vars) {
        if (!v.valid()) throw std::invalid_argument("invalid Var passed to op");
        if (g && g != v.graph) throw std::invalid_argument("Vars from different graphs combined");
        g = v.graph;
    }
    return *g;
}

template <class F>
Var unary(Op op, Var a, F&& f, double pa = 0.0, double pb = 0.0) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    Tensor out(x.shape);
    const double* src = x.data.data();
    double* dst = out.data.data();
    kernels::for_each_index(x.numel(), [&](std::size_t i) { dst[i] = f(src[i]); });
    Node n;
    n.op = op;
    n.inputs = {a.id};
    n.value = std::move(out);
    n.a = pa;
    n.b = pb;
    return g.record(std::move(n));
}

template <class F>
Var binary(Op op, Var a, Var b, F&& f) {
    Graph& g = owner({a, b});
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    BroadcastView bv(x, y, op_name(op));
    Tensor out(bv.shape);
    double* dst = out.data.data();
    if (bv.same) {
        const double* xs = x.data.data();
        const double* ys = y.data.data();
        kernels::for_each_index(out.numel(), [&](std::size_t i) { dst[i] = f(xs[i], ys[i]); });
    } else {
        const std::size_t cols = bv.cols;
        kernels::for_each_index(bv.rows, [&](std::size_t r) {
            for (std::size_t c = 0; c < cols; ++c) dst[r * cols + c] = f(bv.a_at(x, r, c), bv.b_at(y, r, c));
        });
    }
    Node n;
    n.op = op;
    n.inputs = {a.id, b.id};
    n.value = std::move(out);
    return g.record(std::move(n));
}

}  // namespace

Var add(Var a, Var b) { return binary(Op::Add, a, b, [](double x, double y) { return x + y; }); }
Var sub(Var a, Var b) { return binary(Op::Sub, a, b, [](double x, double y) { return x - y; }); }
Var mul(Var a, Var b) { return binary(Op::Mul, a, b, [](double x, double y) { return x * y; }); }
Var div(Var a, Var b) { return binary(Op::Div, a, b, [](double x, double y) { return x / y; }); }
Var minimum(Var a, Var b) {
    return binary(Op::Minimum, a, b, [](double x, double y) { return x <= y ? x : y; });
}
Var maximum(Var a, Var b) {
    return binary(Op::Maximum, a, b, [](double x, double y) { return x >= y ? x : y; });
}

Var neg(Var a) { return unary(Op::Neg, a, [](double x) { return -x; }); }
Var scale(Var a, double c) { return unary(Op::Scale, a, [c](double x) { return c * x; }, c); }
Var add_scalar(Var a, double c) { return unary(Op::AddScalar, a, [c](double x) { return x + c; }, c); }
Var pow(Var a, double p) {
    if (p == 2.0) return unary(Op::Pow, a, [](double x) { return x * x; }, p);
    return unary(Op::Pow, a, [p](double x) { return std::pow(x, p); }, p);
}
Var exp(Var a) { return unary(Op::Exp, a, [](double x) { return std::exp(x); }); }
Var log(Var a) { return unary(Op::Log, a, [](double x) { return std::log(x); }); }
Var sin(Var a) { return unary(Op::Sin, a, [](double x) { return std::sin(x); }); }
Var cos(Var a) { return unary(Op::Cos, a, [](double x) { return std::cos(x); }); }
Var sigmoid(Var a) { return unary(Op::Sigmoid, a, detail::sigmoid); }
Var softplus(Var a) { return unary(Op::Softplus, a, detail::softplus); }
Var relu(Var a) { return unary(Op::Relu, a, [](double x) { return x > 0.0 ? x : 0.0; }); }
Var abs(Var a) { return unary(Op::Abs, a, [](double x) { return std::fabs(x); }); }
Var step(Var a) { return unary(Op::Step, a, [](double x) { return x > 0.0 ? 1.0 : 0.0; }); }
Var sign(Var a) {
    return unary(Op::Sign, a, [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}
Var clamp(Var a, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
    return unary(Op::Clamp, a, [lo, hi](double x) { return std::clamp(x, lo, hi); }, lo, hi);
}

Var detach(Var a) { return owner({a}).constant(a.value()); }

namespace {

Var matmul_impl(Op op, Var a, Var b) {
    Graph& g = owner({a, b});
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    if (x.rank() != 2 || y.rank() != 2)
        throw ShapeError(std::string(op_name(op)) + ": operands must be rank 2, got " + shape_str(x.shape) +
                         " and " + shape_str(y.shape));
    std::size_t m = 0, k = 0, n = 0;
    bool ok = false;
    if (op == Op::MatMul) {
        m = x.rows(), k = x.cols(), n = y.cols();
        ok = y.rows() == k;
    } else if (op == Op::MatMulNT) {
        m = x.rows(), k = x.cols(), n = y.rows();
        ok = y.cols() == k;
    } else {
        m = x.cols(), k = x.rows(), n = y.cols();
        ok = y.rows() == k;
    }
    if (!ok)
        throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + shape_str(x.shape) + " and " +
                         shape_str(y.shape));
    Tensor out(Shape{m, n});
    if (op == Op::MatMul)
        kernels::gemm(x.data.data(), y.data.data(), out.data.data(), m, k, n);
    else if (op == Op::MatMulNT)
        kernels::gemm_nt(x.data.data(), y.data.data(), out.data.data(), m, k, n);
    else
        kernels::gemm_tn(x.data.data(), y.data.data(), out.data.data(), m, k, n);
    Node nd;
    nd.op = op;
    nd.inputs = {a.id, b.id};
    nd.value = std::move(out);
    return g.record(std::move(nd));
}

}  // namespace

Var matmul(Var a, Var b) { return matmul_impl(Op::MatMul, a, b); }
Var matmul_nt(Var a, Var b) { return matmul_impl(Op::MatMulNT, a, b); }
Var matmul_tn(Var a, Var b) { return matmul_impl(Op::MatMulTN, a, b); }

Var sum(Var a) {
    Graph& g = owner({a});
    double s = 0.0;
    for (double v : a.value().data) s += v;
    Node n;
    n.op = Op::Sum;
    n.inputs = {a.id};
    n.value = Tensor::scalar(s);
    return g.record(std::move(n));
}

Var mean(Var a) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    if (x.numel() == 0) throw ShapeError("mean of empty tensor");
    double s = 0.0;
    for (double v : x.data) s += v;
    Node n;
    n.op = Op::Mean;
    n.inputs = {a.id};
    n.value = Tensor::scalar(s / static_cast<double>(x.numel()));
    return g.record(std::move(n));
}

Var sum_to(Var a, const Shape& shape) {
    Graph& g = owner({a});
    Tensor out = detail::reduce_to(a.value(), shape);
    Node n;
    n.op = Op::SumTo;
    n.inputs = {a.id};
    n.value = std::move(out);
    return g.record(std::move(n));
}

Var broadcast_to(Var a, const Shape& shape) {
    Graph& g = owner({a});
    Tensor out = detail::expand_to(a.value(), shape);
    Node n;
    n.op = Op::BroadcastTo;
    n.inputs = {a.id};
    n.value = std::move(out);
    return g.record(std::move(n));
}

Var variance(Var a) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    const std::size_t rows = x.rows(), cols = x.cols();
    if (rows == 0) throw ShapeError("variance of empty tensor");
    Tensor out(Shape{1, cols});
    for (std::size_t c = 0; c < cols; ++c) {
        double mu = 0.0;
        for (std::size_t r = 0; r < rows; ++r) mu += x(r, c);
        mu /= static_cast<double>(rows);
        double v = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = x(r, c) - mu;
            v += d * d;
        }
        out.data[c] = v / static_cast<double>(rows);
    }
    Node n;
    n.op = Op::Variance;
    n.inputs = {a.id};
    n.value = std::move(out);
    return g.record(std::move(n));
}

Var dot(Var a, Var b) {
    Graph& g = owner({a, b});
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw ShapeError("dot: shapes differ " + shape_str(x.shape) + " vs " + shape_str(y.shape));
    const std::size_t rows = x.rows(), cols = x.cols();
    Tensor out(Shape{rows, 1});
    kernels::for_each_index(rows, [&](std::size_t r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += x(r, c) * y(r, c);
        out.data[r] = s;
    });
    Node n;
    n.op = Op::RowDot;
    n.inputs = {a.id, b.id};
    n.value = std::move(out);
    return g.record(std::move(n));
}

Var norm(Var a) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    const std::size_t rows = x.rows(), cols = x.cols();
    Tensor out(Shape{rows, 1});
    kernels::for_each_index(rows, [&](std::size_t r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += x(r, c) * x(r, c);
        out.data[r] = std::sqrt(s);
    });
    Node n;
    n.op = Op::RowNorm;
    n.inputs = {a.id};
    n.value = std::move(out);
    return g.record(std::move(n));
}

Var normalize(Var a) { return div(a, norm(a)); }

Var concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat of nothing");
    Graph& g = owner({parts.front()});
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const Var& p : parts) {
        owner({parts.front(), p});
        if (p.rows() != rows) throw ShapeError("concat: row counts differ");
        cols += p.cols();
    }
    Tensor out(Shape{rows, cols});
    std::size_t off = 0;
    Node n;
    n.op = Op::Concat;
    for (const Var& p : parts) {
        const Tensor& x = p.value();
        const std::size_t pc = x.cols();
        kernels::for_each_index(rows, [&](std::size_t r) {
            std::copy_n(x.data.data() + r * pc, pc, out.data.data() + r * cols + off);
        });
        off += pc;
        n.inputs.push_back(p.id);
    }
    n.value = std::move(out);
    return g.record(std::move(n));
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    if (begin > end || end > x.cols()) throw ShapeError("slice_cols: range out of bounds");
    const std::size_t rows = x.rows(), cols = x.cols(), w = end - begin;
    Tensor out(Shape{rows, w});
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(x.data.data() + r * cols + begin, w, out.data.data() + r * w);
    Node n;
    n.op = Op::SliceCols;
    n.inputs = {a.id};
    n.value = std::move(out);
    n.i0 = begin;
    n.i1 = end;
    return g.record(std::move(n));
}

Var pad_cols(Var a, std::size_t total, std::size_t offset) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    const std::size_t rows = x.rows(), w = x.cols();
    if (offset + w > total) throw ShapeError("pad_cols: does not fit");
    Tensor out(Shape{rows, total});
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(x.data.data() + r * w, w, out.data.data() + r * total + offset);
    Node n;
    n.op = Op::PadCols;
    n.inputs = {a.id};
    n.value = std::move(out);
    n.i0 = total;
    n.i1 = offset;
    return g.record(std::move(n));
}

Var reshape(Var a, const Shape& shape) {
    Graph& g = owner({a});
    if (shape_numel(shape) != a.value().numel())
        throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
    Node n;
    n.op = Op::Reshape;
    n.inputs = {a.id};
    n.value = Tensor(shape, a.value().data);
    return g.record(std::move(n));
}

Var index_rows(Var a, std::shared_ptr<const std::vector<std::size_t>> rows) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    const std::size_t cols = x.cols();
    Tensor out(Shape{rows->size(), cols});
    for (std::size_t i = 0; i < rows->size(); ++i) {
        const std::size_t r = (*rows)[i];
        if (r >= x.rows()) throw ShapeError("index_rows: index out of range");
        std::copy_n(x.data.data() + r * cols, cols, out.data.data() + i * cols);
    }
    Node n;
    n.op = Op::IndexRows;
    n.inputs = {a.id};
    n.value = std::move(out);
    n.index = std::move(rows);
    return g.record(std::move(n));
}

Var scatter_rows(Var a, std::shared_ptr<const std::vector<std::size_t>> rows, std::size_t out_rows) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    if (x.rows() != rows->size()) throw ShapeError("scatter_rows: index count != rows");
    const std::size_t cols = x.cols();
    Tensor out(Shape{out_rows, cols});
    for (std::size_t i = 0; i < rows->size(); ++i) {
        const std::size_t r = (*rows)[i];
        if (r >= out_rows) throw ShapeError("scatter_rows: index out of range");
        for (std::size_t c = 0; c < cols; ++c) out.data[r * cols + c] += x.data[i * cols + c];
    }
    Node n;
    n.op = Op::ScatterRows;
    n.inputs = {a.id};
    n.value = std::move(out);
    n.index = std::move(rows);
    n.i0 = out_rows;
    return g.record(std::move(n));
}

Var segment_sum(Var a, std::size_t group) {
    Graph& g = owner({a});
    const Tensor& x = a.value();
    if (group == 0 || x.rows() % group != 0) throw ShapeError("segment_sum: rows not divisible by group");
    const std::size_t groups = x.rows() / group, cols = x.cols();
    Tensor out(Shape{groups, cols});
    kernels::segment_sum(x.data.data(), out.data.data(), groups, group, cols);
    Node n;
    n.op = Op::SegmentSum;
    n.inputs = {a.id};
    n.value = std::move(out);
    n.i0 = group;
    return g.record(std::move(n));
}

Var repeat_rows(Var a, std::size_t group) {
    Graph& g = owner({a});
    Tensor out = detail::repeat_rows(a.value(), group);
    Node n;
    n.op = Op::RepeatRows;
    n.inputs = {a.id};
    n.value = std::move(out);
    n.i0 = group;
    return g.record(std::move(n));
}

Var cumsum_exclusive(Var a) {
    Graph& g = owner({a});
    Node n;
    n.op = Op::CumsumExcl;
    n.inputs = {a.id};
    n.value = detail::cumsum_exclusive(a.value(), false);
    return g.record(std::move(n));
}

Var rev_cumsum_exclusive(Var a) {
    Graph& g = owner({a});
    Node n;
    n.op = Op::RevCumsumExcl;
    n.inputs = {a.id};
    n.value = detail::cumsum_exclusive(a.value(), true);
    return g.record(std::move(n));
}

Var custom(std::vector<Var> inputs, Tensor output, std::shared_ptr<const CustomOp> op) {
    if (inputs.empty()) throw std::invalid_argument("custom op without inputs");
    Graph& g = owner({inputs.front()});
    Node n;
    n.op = Op::Custom;
    for (const Var& v : inputs) {
        owner({inputs.front(), v});
        n.inputs.push_back(v.id);
    }
    n.value = std::move(output);
    n.custom = std::move(op);
    return g.record(std::move(n));
}

}  // namespace invrend::ad
