#include "invrend/tensor.hpp"

#include <cmath>
#include <sstream>

namespace invrend {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(shape_numel(shape), fill) {
    if (shape.size() > 2) throw ShapeError("tensor rank > 2 is not supported: " + shape_str(shape));
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (shape.size() > 2) throw ShapeError("tensor rank > 2 is not supported: " + shape_str(shape));
    if (data.size() != shape_numel(shape))
        throw ShapeError("element count " + std::to_string(data.size()) + " does not match shape " +
                         shape_str(shape));
}

Tensor Tensor::from_rows(std::size_t rows, std::size_t cols, std::initializer_list<double> v) {
    return Tensor(Shape{rows, cols}, std::vector<double>(v));
}

std::size_t Tensor::rows() const { return shape.size() == 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const {
    if (shape.empty()) return 1;
    return shape.back();
}

double Tensor::item() const {
    if (data.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape));
    return data[0];
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace invrend
