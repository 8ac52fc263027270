#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "distlab/errors.hpp"

namespace distlab {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    Vector row_vector(std::size_t i) const {
        return Vector(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
                      data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(std::span<const double>(m.data)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("dot: size " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y = A x
inline Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols != x.size()) {
        throw DimensionMismatch("matvec: cols " + std::to_string(a.cols) + " vs x " +
                                std::to_string(x.size()));
    }
    Vector y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) y[i] = dot(a.row(i), x);
    return y;
}

/// y = A^T x
inline Vector matvec_t(const Matrix& a, std::span<const double> x) {
    if (a.rows != x.size()) {
        throw DimensionMismatch("matvec_t: rows " + std::to_string(a.rows) + " vs x " +
                                std::to_string(x.size()));
    }
    Vector y(a.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double xi = x[i];
        const double* ai = a.data.data() + i * a.cols;
        for (std::size_t j = 0; j < a.cols; ++j) y[j] += ai[j] * xi;
    }
    return y;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw DimensionMismatch("matmul: " + std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows));
    }
    Matrix c(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.data.data() + k * b.cols;
            double* ci = c.data.data() + i * c.cols;
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

/// X^T X, exploiting symmetry.
inline Matrix gram(const Matrix& x) {
    Matrix g(x.cols, x.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.data.data() + i * x.cols;
        for (std::size_t a = 0; a < x.cols; ++a) {
            const double v = xi[a];
            if (v == 0.0) continue;
            for (std::size_t b = a; b < x.cols; ++b) g(a, b) += v * xi[b];
        }
    }
    for (std::size_t a = 0; a < x.cols; ++a)
        for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
    return g;
}

inline double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Unbiased sample variance (divisor n-1); 0 for fewer than two values.
inline double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double sample_stddev(std::span<const double> v) { return std::sqrt(sample_variance(v)); }

inline double log_sum_exp(std::span<const double> v) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : v) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double x : v) s += std::exp(x - hi);
    return hi + std::log(s);
}

/// softmax(v / temperature), numerically stable.
inline Vector softmax(std::span<const double> v, double temperature = 1.0) {
    Vector scaled(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) scaled[i] = v[i] / temperature;
    const double lse = log_sum_exp(scaled);
    Vector p(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = std::exp(scaled[i] - lse);
    return p;
}

inline std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

}  // namespace distlab
