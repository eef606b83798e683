#include "freqseg/tensor/ndarray.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "freqseg/error.hpp"

namespace freqseg {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

static void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("array shape must have at least one axis");
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (shape[i] == 0)
            throw ShapeError("array extent must be positive on axis " + std::to_string(i),
                             static_cast<int>(i));
    }
}

NdArray::NdArray(Shape shape, double fill) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
}

NdArray::NdArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_size(shape_))
        throw ShapeError("buffer of " + std::to_string(data_.size()) +
                         " elements does not match shape " + shape_to_string(shape_));
}

std::size_t NdArray::offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size())
        throw ShapeError("index rank " + std::to_string(index.size()) +
                         " does not match array rank " + std::to_string(shape_.size()));
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= shape_[axis])
            throw ShapeError("index out of range on axis " + std::to_string(axis),
                             static_cast<int>(axis));
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

double& NdArray::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
double NdArray::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

void NdArray::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double NdArray::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double NdArray::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const NdArray& a, const NdArray& b) {
    if (a.shape() != b.shape())
        throw ShapeError("shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace freqseg
