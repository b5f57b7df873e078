#pragma once

// Reverse-mode automatic differentiation over dense f64 tensors.
//
// A Graph records every op applied to its Vars in creation order, which is
// already a topological order. backward() walks it in reverse and
// accumulates numeric gradients; grad() instead records the vector-Jacobian
// products as new ops, so the result can itself be differentiated.
//
// Broadcasting: every tensor is viewed as (rows, cols). Binary elementwise
// ops accept operands whose rows agree or are 1, and whose cols agree or
// are 1. The result has the larger extent in each dimension and the larger
// rank. Nothing else broadcasts.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "invrend/tensor.hpp"

namespace invrend::ad {

class Graph;

enum class Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Minimum,
    Maximum,
    Neg,
    Scale,
    AddScalar,
    Pow,
    Exp,
    Log,
    Sin,
    Cos,
    Sigmoid,
    Softplus,
    Relu,
    Abs,
    Step,
    Sign,
    Clamp,
    MatMul,
    MatMulNT,
    MatMulTN,
    Sum,
    Mean,
    SumTo,
    BroadcastTo,
    Variance,
    RowDot,
    RowNorm,
    Concat,
    SliceCols,
    PadCols,
    Reshape,
    IndexRows,
    ScatterRows,
    SegmentSum,
    RepeatRows,
    CumsumExcl,
    RevCumsumExcl,
    Custom,
};

const char* op_name(Op op);

/// Handle to a node on a Graph. Cheap to copy.
struct Var {
    Graph* graph = nullptr;
    int id = -1;

    bool valid() const { return graph != nullptr && id >= 0; }
    const Tensor& value() const;
    const Shape& shape() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double item() const { return value().item(); }
    bool requires_grad() const;
};

/// Fused op with a hand-written numeric backward. Custom ops do not support
/// being differentiated twice.
class CustomOp {
public:
    virtual ~CustomOp() = default;
    virtual const char* name() const = 0;
    /// Accumulates d(loss)/d(input_i) into grad_in[i]; entries are null for
    /// inputs that do not need a gradient.
    virtual void backward(std::span<const Tensor* const> inputs, const Tensor& output,
                          const Tensor& grad_out, std::span<Tensor* const> grad_in) const = 0;
};

struct Node {
    Op op = Op::Leaf;
    std::vector<int> inputs;
    Tensor value;
    bool requires_grad = false;
    int param = -1;  // external parameter slot for trainable leaves
    double a = 0.0, b = 0.0;
    std::size_t i0 = 0, i1 = 0;
    Shape aux_shape;
    std::shared_ptr<const std::vector<std::size_t>> index;
    std::shared_ptr<const CustomOp> custom;
};

/// Gradients keyed by node id.
using GradientMap = std::unordered_map<int, Tensor>;

class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// Leaf that never receives a gradient.
    Var constant(Tensor value);
    /// Leaf that gradients can be taken with respect to.
    Var input(Tensor value);
    /// Trainable leaf tied to external parameter slot `slot`.
    Var parameter(Tensor value, int slot);

    /// Gradients of a scalar `loss` w.r.t. every trainable leaf and input
    /// leaf it depends on.
    GradientMap backward(Var loss);

    /// d(output)/d(input) for scalar `output`. With create_graph the result
    /// is recorded on this graph and is differentiable; otherwise it is a
    /// constant.
    Var grad(Var output, Var input, bool create_graph = true);

    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    // Used by the op constructors.
    Var record(Node n);

private:
    void check_owned(Var v, const char* what) const;
    std::vector<Node> nodes_;
};

// Elementwise binary (broadcasting).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
/// Elementwise min/max; the subgradient goes to `a` on ties.
Var minimum(Var a, Var b);
Var maximum(Var a, Var b);

// Elementwise unary.
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var pow(Var a, double exponent);
Var exp(Var a);
Var log(Var a);
Var sin(Var a);
Var cos(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var relu(Var a);
Var abs(Var a);
/// Heaviside step (1 where a > 0); zero gradient.
Var step(Var a);
/// Sign (-1, 0, 1); zero gradient.
Var sign(Var a);
/// Clamp to [lo, hi]; gradient passes only where lo <= a <= hi.
Var clamp(Var a, double lo, double hi);
/// Value of `a` with no gradient path.
Var detach(Var a);

// Linear algebra.
Var matmul(Var a, Var b);     ///< a[M,K] b[K,N]
Var matmul_nt(Var a, Var b);  ///< a[M,K] b[N,K]^T
Var matmul_tn(Var a, Var b);  ///< a[K,M]^T b[K,N]

// Reductions.
Var sum(Var a);   ///< to a scalar
Var mean(Var a);  ///< to a scalar
/// Sums over the dimensions where `shape` has extent 1 (rank follows `shape`).
Var sum_to(Var a, const Shape& shape);
Var broadcast_to(Var a, const Shape& shape);
/// Population variance of each column over the rows -> [1, C].
Var variance(Var a);

// Row-wise vector ops.
Var dot(Var a, Var b);  ///< [R,C] x [R,C] -> [R,1]
Var norm(Var a);        ///< [R,C] -> [R,1]
Var normalize(Var a);   ///< a / norm(a)

// Structural.
Var concat(const std::vector<Var>& parts);  ///< along columns
Var slice_cols(Var a, std::size_t begin, std::size_t end);
/// Places `a` at column offset `offset` of a zero tensor with `total` columns.
Var pad_cols(Var a, std::size_t total, std::size_t offset);
Var reshape(Var a, const Shape& shape);
Var index_rows(Var a, std::shared_ptr<const std::vector<std::size_t>> rows);
Var scatter_rows(Var a, std::shared_ptr<const std::vector<std::size_t>> rows, std::size_t out_rows);
/// Sums consecutive groups of `group` rows.
Var segment_sum(Var a, std::size_t group);
/// Repeats every row `group` times.
Var repeat_rows(Var a, std::size_t group);
/// out[r, j] = sum_{i < j} a[r, i]
Var cumsum_exclusive(Var a);
/// out[r, j] = sum_{i > j} a[r, i]
Var rev_cumsum_exclusive(Var a);

Var custom(std::vector<Var> inputs, Tensor output, std::shared_ptr<const CustomOp> op);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }
inline Var operator+(double c, Var a) { return add_scalar(a, c); }
inline Var operator-(Var a, double c) { return add_scalar(a, -c); }
inline Var operator-(double c, Var a) { return add_scalar(neg(a), c); }

}  // namespace invrend::ad
