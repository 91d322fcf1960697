#pragma once

#include <functional>

#include "advhash/tensor.hpp"

namespace advhash {

using ScalarFunction = std::function<double(const Tensor&)>;

// Central-difference estimate (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
// Throws NumericError if f returns a non-finite value.
Tensor finite_difference_gradient(const ScalarFunction& f, const Tensor& point, double step = 1e-5);

// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true
// derivative is ~0 from dominating the comparison.
double relative_error(double a, double b, double floor = 1e-6);

double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-6);

}  // namespace advhash
