#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "distlab/errors.hpp"
#include "distlab/matrix.hpp"

namespace distlab {

struct AdamConfig {
    double lr{0.001};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
};

/// Internal Adam state, reusable across training loops that own their
/// parameter layout (MLP, sequence tables).
struct AdamState {
    Vector m;
    Vector v;
    std::size_t t{0};

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    /// One bias-corrected update of params in place.
    void step(std::span<double> params, std::span<const double> grad, const AdamConfig& cfg) {
        t += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
};

using GradFn = std::function<Vector(const Vector&)>;

/// Runs `steps` full Adam updates from `init` and returns the final parameters.
inline Vector adam_optimize(const GradFn& grad_fn, const Vector& init, std::size_t steps,
                            double lr, double beta1 = 0.9, double beta2 = 0.999,
                            double eps = 1e-8) {
    if (steps < 1) throw InvalidShape("adam_optimize: steps must be >= 1");
    if (lr <= 0.0) throw InvalidShape("adam_optimize: lr must be > 0");
    Vector params = init;
    AdamState state(params.size());
    const AdamConfig cfg{lr, beta1, beta2, eps};
    for (std::size_t s = 0; s < steps; ++s) {
        Vector g = grad_fn(params);
        if (g.size() != params.size()) {
            throw DimensionMismatch("adam_optimize: gradient size " + std::to_string(g.size()));
        }
        if (!all_finite(std::span<const double>(g))) {
            throw NonFiniteGradient("adam_optimize: non-finite gradient at step " +
                                    std::to_string(s));
        }
        state.step(params, g, cfg);
    }
    return params;
}

}  // namespace distlab
