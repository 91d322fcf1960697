#include "advhash/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "advhash/error.hpp"

namespace advhash {

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

void check_dims(const Shape& shape) {
    if (shape.empty()) throw ConfigError("tensor: shape must have at least one dimension");
    for (auto d : shape)
        if (d == 0) throw ConfigError("tensor: zero dimension in shape " + shape_string(shape));
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    check_dims(shape_);
    data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_dims(shape_);
    if (data_.size() != shape_size(shape_))
        throw DimensionError("tensor", std::to_string(shape_size(shape_)) + " elements for " + shape_string(shape_),
                             std::to_string(data_.size()) + " elements");
}

Tensor Tensor::from(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::from(Shape shape, std::initializer_list<double> values) {
    return Tensor(std::move(shape), std::vector<double>(values));
}

double& Tensor::at(std::size_t i, std::size_t j) {
    return data_[i * shape_.back() + j];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    return data_[i * shape_.back() + j];
}

Tensor Tensor::reshaped(Shape shape) const& {
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::reshaped(Shape shape) && {
    return Tensor(std::move(shape), std::move(data_));
}

Tensor Tensor::slice(std::size_t index) const {
    if (shape_.size() < 2 || index >= shape_[0])
        throw DimensionError("tensor slice", "index < leading dimension of a rank>=2 tensor",
                             std::to_string(index) + " of " + shape_string(shape_));
    Shape inner(shape_.begin() + 1, shape_.end());
    const std::size_t n = shape_size(inner);
    return Tensor(std::move(inner), std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(index * n),
                                                        data_.begin() + static_cast<std::ptrdiff_t>((index + 1) * n)));
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor stack(std::span<const Tensor> items) {
    if (items.empty()) throw ConfigError("stack: no tensors");
    const Shape& inner = items.front().shape();
    Shape shape{items.size()};
    shape.insert(shape.end(), inner.begin(), inner.end());
    std::vector<double> data;
    data.reserve(shape_size(shape));
    for (const auto& t : items) {
        if (t.shape() != inner) throw DimensionError("stack", shape_string(inner), shape_string(t.shape()));
        data.insert(data.end(), t.data().begin(), t.data().end());
    }
    return Tensor(std::move(shape), std::move(data));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) throw DimensionError("max_abs_diff", shape_string(a.shape()), shape_string(b.shape()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace advhash
