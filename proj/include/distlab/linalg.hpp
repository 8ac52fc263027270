#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "distlab/errors.hpp"
#include "distlab/matrix.hpp"
#include "distlab/rng.hpp"

namespace distlab {

/// Relative singularity tolerance on the X^T X spectrum.
constexpr double kSingularTol = 1e-10;

/// Matrix of i.i.d. normal draws; std = 0 gives the constant matrix.
inline Matrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols, double mean,
                              double std) {
    if (std < 0.0) throw NegativeStd("gaussian_matrix: std " + std::to_string(std));
    Matrix m(rows, cols, mean);
    if (std == 0.0) return m;
    for (double& v : m.data) v = rng.normal(mean, std);
    return m;
}

inline Vector gaussian_vector(RngStream& rng, std::size_t n, double mean, double std) {
    return gaussian_matrix(rng, n, 1, mean, std).data;
}

/// Least-squares solve of min ||X theta - y|| via Householder QR of X.
/// The rank test compares squared R-diagonal magnitudes, matching the
/// 1e-10 relative tolerance on the X^T X spectrum.
inline Vector solve_least_squares(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    if (n != y.size()) {
        throw DimensionMismatch("solve_least_squares: rows " + std::to_string(n) + " vs y " +
                                std::to_string(y.size()));
    }
    if (n < d) {
        throw SingularDesign("solve_least_squares: underdetermined (" + std::to_string(n) + "x" +
                             std::to_string(d) + ")");
    }

    Matrix a = x;
    Vector b(y.begin(), y.end());

    for (std::size_t k = 0; k < d; ++k) {
        double col_norm = 0.0;
        for (std::size_t i = k; i < n; ++i) col_norm += a(i, k) * a(i, k);
        col_norm = std::sqrt(col_norm);
        if (col_norm == 0.0) continue;  // caught by the rank test below

        const double alpha = (a(k, k) >= 0.0) ? -col_norm : col_norm;
        // Householder vector v, stored below the diagonal, v[k] implicit
        const double vk = a(k, k) - alpha;
        a(k, k) = alpha;
        const double denom = -alpha * vk;  // = ||v||^2 / 2
        if (denom <= 0.0) continue;

        // apply H = I - v v^T / denom to remaining columns and b
        for (std::size_t j = k + 1; j < d; ++j) {
            double s = vk * a(k, j);
            for (std::size_t i = k + 1; i < n; ++i) s += a(i, k) * a(i, j);
            s /= denom;
            a(k, j) -= s * vk;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * a(i, k);
        }
        double s = vk * b[k];
        for (std::size_t i = k + 1; i < n; ++i) s += a(i, k) * b[i];
        s /= denom;
        b[k] -= s * vk;
        for (std::size_t i = k + 1; i < n; ++i) b[i] -= s * a(i, k);
    }

    double max_diag2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) max_diag2 = std::max(max_diag2, a(k, k) * a(k, k));
    for (std::size_t k = 0; k < d; ++k) {
        if (a(k, k) * a(k, k) <= kSingularTol * max_diag2) {
            throw SingularDesign("solve_least_squares: rank-deficient at column " +
                                 std::to_string(k));
        }
    }

    Vector theta(d, 0.0);
    for (std::size_t k = d; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < d; ++j) s -= a(k, j) * theta[j];
        theta[k] = s / a(k, k);
    }
    return theta;
}

/// Cholesky factor L (lower) of a symmetric positive-definite matrix.
inline Matrix cholesky(const Matrix& s) {
    if (s.rows != s.cols) throw DimensionMismatch("cholesky: not square");
    const std::size_t n = s.rows;
    Matrix l(n, n, 0.0);
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(s(i, i)));
    for (std::size_t j = 0; j < n; ++j) {
        double diag = s(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > kSingularTol * max_diag)) {
            throw SingularDesign("cholesky: not positive definite at pivot " + std::to_string(j));
        }
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = s(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

/// Solve S z = b given the Cholesky factor L of S.
inline Vector cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows;
    if (b.size() != n) throw DimensionMismatch("cholesky_solve: size mismatch");
    Vector z(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) z[i] -= l(i, k) * z[k];
        z[i] /= l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) z[i] -= l(k, i) * z[k];
        z[i] /= l(i, i);
    }
    return z;
}

/// Inverse of a symmetric positive-definite matrix via Cholesky solves.
inline Matrix spd_inverse(const Matrix& s) {
    const Matrix l = cholesky(s);
    const std::size_t n = s.rows;
    Matrix inv(n, n, 0.0);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const Vector col = cholesky_solve(l, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

/// x^T S^{-1} x for SPD S given its Cholesky factor.
inline double quad_form_inv(const Matrix& l, std::span<const double> x) {
    const Vector z = cholesky_solve(l, x);
    return dot(x, z);
}

/// tr(A (X^T X)^{-1} A^T) = sum_i a_i^T (X^T X)^{-1} a_i over rows of A.
inline double trace_quad_form_inv(const Matrix& gram_x, const Matrix& a) {
    if (gram_x.rows != a.cols) throw DimensionMismatch("trace_quad_form_inv: dims");
    const Matrix l = cholesky(gram_x);
    double tr = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) tr += quad_form_inv(l, a.row(i));
    return tr;
}

}  // namespace distlab
