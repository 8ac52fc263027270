#pragma once

#include <cmath>
#include <functional>

#include "distlab/errors.hpp"
#include "distlab/matrix.hpp"

namespace distlab {

using ScalarFn = std::function<double(const Vector&)>;

/// Central-difference gradient estimate, component-wise.
inline Vector finite_diff_grad(const ScalarFn& f, const Vector& x, double h = 1e-5) {
    if (h <= 0.0) throw InvalidShape("finite_diff_grad: h must be > 0");
    Vector g(x.size(), 0.0);
    Vector probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NonFiniteGradient("finite_diff_grad: non-finite f near component " +
                                    std::to_string(i));
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace distlab
