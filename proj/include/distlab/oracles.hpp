#pragma once

#include <cstddef>
#include <utility>

#include "distlab/errors.hpp"
#include "distlab/linalg.hpp"
#include "distlab/matrix.hpp"

namespace distlab {
namespace oracles {

// Closed-form ground truth for every Monte Carlo measurement. All gram-matrix
// inverses go through Cholesky solves of X^T X, never an explicit inverse,
// and every oracle receives the same realized X the Monte Carlo run used.

/// Var(theta_hat_S) = sigma_T^2 (X^T X)^{-1}.
inline Matrix param_covariance(double sigma_t2, const Matrix& x) {
    const Matrix g = gram(x);
    Matrix cov = spd_inverse(g);
    for (double& v : cov.data) v *= sigma_t2;
    return cov;
}

/// Expected eval MSE against the teacher mapping:
/// (sigma_T^2 / n_test) tr(X_test (X^T X)^{-1} X_test^T).
/// The same expression is the expected inter-student variance of unbiased
/// linear students averaged over the test inputs.
inline double expected_mse_vs_teacher(double sigma_t2, const Matrix& x, const Matrix& x_test) {
    if (x.cols != x_test.cols) throw DimensionMismatch("expected_mse_vs_teacher: feature dims");
    const double tr = trace_quad_form_inv(gram(x), x_test);
    return sigma_t2 * tr / static_cast<double>(x_test.rows);
}

/// Expected eval MSE against ground truth: bias + teacher-noise trace term +
/// irreducible noise.
inline double expected_mse_vs_truth(std::span<const double> theta_t,
                                    std::span<const double> theta_star, double sigma_t2,
                                    double sigma_eta2, const Matrix& x, const Matrix& x_test) {
    if (theta_t.size() != theta_star.size() || theta_t.size() != x.cols)
        throw DimensionMismatch("expected_mse_vs_truth: parameter dims");
    Vector diff(theta_t.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = theta_t[i] - theta_star[i];
    const Vector proj = matvec(x_test, diff);
    const double bias = dot(proj, proj) / static_cast<double>(x_test.rows);
    return bias + expected_mse_vs_teacher(sigma_t2, x, x_test) + sigma_eta2;
}

/// Ground-truth bootstrap predictive variance at x: (sigma^2 / m) x^T Sigma_X^{-1} x.
inline double bootstrap_variance(double sigma2, std::size_t m, std::span<const double> x,
                                 const Matrix& sigma_x) {
    if (m < 1) throw InvalidShape("bootstrap_variance: m must be >= 1");
    if (sigma_x.rows != x.size()) throw DimensionMismatch("bootstrap_variance: dims");
    const Matrix l = cholesky(sigma_x);
    return sigma2 / static_cast<double>(m) * quad_form_inv(l, x);
}

/// Ground-truth bootstrap expected test MSE: sigma^2 + sigma^2 d / m.
inline double bootstrap_mse(double sigma2, std::size_t d, std::size_t m) {
    if (m < 1) throw InvalidShape("bootstrap_mse: m must be >= 1");
    return sigma2 + sigma2 * static_cast<double>(d) / static_cast<double>(m);
}

/// Averaged-target student prediction variance at x: (sigma_T^2 / k) x^T (X^T X)^{-1} x.
inline double averaged_prediction_variance(double sigma_t2, std::size_t k,
                                           std::span<const double> x, const Matrix& design) {
    if (k < 1) throw InvalidShape("averaged_prediction_variance: k must be >= 1");
    if (design.cols != x.size())
        throw DimensionMismatch("averaged_prediction_variance: dims");
    const Matrix l = cholesky(gram(design));
    return sigma_t2 / static_cast<double>(k) * quad_form_inv(l, x);
}

/// Inverse-variance weights (w_T, w_S), summing to one.
inline std::pair<double, double> optimal_weights(double sigma_t2_hat, double sigma_s2) {
    if (sigma_t2_hat <= 0.0 || sigma_s2 <= 0.0)
        throw NonPositiveVariance("optimal_weights: variances must be > 0");
    const double inv_t = 1.0 / sigma_t2_hat;
    const double inv_s = 1.0 / sigma_s2;
    return {inv_t / (inv_t + inv_s), inv_s / (inv_t + inv_s)};
}

/// Minimum combined target variance: (1/k) sigma_T^2 sigma_S^2 / (sigma_T^2 + sigma_S^2).
inline double min_combined_variance(double sigma_t2_hat, double sigma_s2, std::size_t k) {
    if (sigma_t2_hat <= 0.0 || sigma_s2 <= 0.0)
        throw NonPositiveVariance("min_combined_variance: variances must be > 0");
    if (k < 1) throw InvalidShape("min_combined_variance: k must be >= 1");
    return sigma_t2_hat * sigma_s2 / (sigma_t2_hat + sigma_s2) / static_cast<double>(k);
}

}  // namespace oracles
}  // namespace distlab
