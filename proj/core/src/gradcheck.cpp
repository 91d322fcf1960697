#include "advhash/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "advhash/error.hpp"

namespace advhash {

Tensor finite_difference_gradient(const ScalarFunction& f, const Tensor& point, double step) {
    if (!(step > 0.0)) throw ConfigError("finite_difference_gradient: step must be positive");
    Tensor grad(point.shape());
    Tensor x = point;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double up = f(x);
        x[i] = orig - step;
        const double down = f(x);
        x[i] = orig;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("finite_difference_gradient: non-finite function value at coordinate " +
                               std::to_string(i));
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double relative_error(double a, double b, double floor) {
    const double scale = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / scale;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
    if (analytic.size() != numeric.size())
        throw DimensionError("max_relative_error", shape_string(analytic.shape()), shape_string(numeric.shape()));
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i)
        worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
    return worst;
}

}  // namespace advhash
