#pragma once

// Helpers shared by the forward ops and the two backward paths.

#include <cmath>
#include <string>

#include "invrend/tensor.hpp"

namespace invrend::ad::detail {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

/// Resolves the (rows, cols) broadcast of two operands.
struct BroadcastView {
    Shape shape;
    std::size_t rows = 0, cols = 0;
    std::size_t ar = 0, ac = 0, br = 0, bc = 0;
    bool same = false;

    BroadcastView(const Tensor& a, const Tensor& b, const char* op) {
        ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
        auto fit = [&](std::size_t x, std::size_t y, std::size_t& out) {
            if (x == y || y == 1) out = x;
            else if (x == 1) out = y;
            else
                throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a.shape) + " with " +
                                 shape_str(b.shape));
        };
        fit(ar, br, rows);
        fit(ac, bc, cols);
        const std::size_t rank = std::max(a.rank(), b.rank());
        if (rank == 2) shape = {rows, cols};
        else if (rank == 1) shape = {cols};
        else shape = {};
        same = ar == br && ac == bc;
    }

    double a_at(const Tensor& a, std::size_t r, std::size_t c) const {
        return a.data[(ar == 1 ? 0 : r) * ac + (ac == 1 ? 0 : c)];
    }
    double b_at(const Tensor& b, std::size_t r, std::size_t c) const {
        return b.data[(br == 1 ? 0 : r) * bc + (bc == 1 ? 0 : c)];
    }
};

/// Sums `g` down to `shape` over the dimensions where `shape` has extent 1.
inline Tensor reduce_to(const Tensor& g, const Shape& shape) {
    Tensor out(shape);
    const std::size_t tr = out.rows(), tc = out.cols();
    const std::size_t gr = g.rows(), gc = g.cols();
    if ((tr != gr && tr != 1) || (tc != gc && tc != 1))
        throw ShapeError("cannot reduce " + shape_str(g.shape) + " to " + shape_str(shape));
    if (tr == gr && tc == gc) {
        out.data = g.data;
        return out;
    }
    for (std::size_t r = 0; r < gr; ++r)
        for (std::size_t c = 0; c < gc; ++c)
            out.data[(tr == 1 ? 0 : r) * tc + (tc == 1 ? 0 : c)] += g.data[r * gc + c];
    return out;
}

/// Expands `a` to `shape` by repeating along dimensions where `a` has extent 1.
inline Tensor expand_to(const Tensor& a, const Shape& shape) {
    Tensor out(shape);
    const std::size_t tr = out.rows(), tc = out.cols();
    const std::size_t sr = a.rows(), sc = a.cols();
    if ((sr != tr && sr != 1) || (sc != tc && sc != 1))
        throw ShapeError("cannot broadcast " + shape_str(a.shape) + " to " + shape_str(shape));
    for (std::size_t r = 0; r < tr; ++r)
        for (std::size_t c = 0; c < tc; ++c)
            out.data[r * tc + c] = a.data[(sr == 1 ? 0 : r) * sc + (sc == 1 ? 0 : c)];
    return out;
}

inline Tensor repeat_rows(const Tensor& a, std::size_t group) {
    const std::size_t rows = a.rows(), cols = a.cols();
    Tensor out(Shape{rows * group, cols});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < group; ++j)
            for (std::size_t c = 0; c < cols; ++c) out.data[(r * group + j) * cols + c] = a.data[r * cols + c];
    return out;
}

inline Tensor cumsum_exclusive(const Tensor& a, bool reverse) {
    Tensor out(a.shape);
    const std::size_t rows = a.rows(), cols = a.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        if (!reverse) {
            for (std::size_t c = 0; c < cols; ++c) {
                out.data[r * cols + c] = s;
                s += a.data[r * cols + c];
            }
        } else {
            for (std::size_t c = cols; c-- > 0;) {
                out.data[r * cols + c] = s;
                s += a.data[r * cols + c];
            }
        }
    }
    return out;
}

}  // namespace invrend::ad::detail
