#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "distlab/distill.hpp"
#include "distlab/errors.hpp"
#include "distlab/linalg.hpp"
#include "distlab/matrix.hpp"
#include "distlab/models.hpp"
#include "distlab/parallel.hpp"
#include "distlab/rng.hpp"

namespace distlab {

enum class BootstrapVariant { teacher_model, ground_truth };

struct BootstrapConfig {
    BootstrapVariant variant{BootstrapVariant::ground_truth};
    std::size_t m{0};  // bootstrap sample size
    std::size_t B{1};  // replicates

    void validate(std::size_t n) const {
        if (m < 1 || m > n)
            throw InvalidShape("BootstrapConfig: m must be in [1, n], got " + std::to_string(m));
        if (B < 1) throw InvalidShape("BootstrapConfig: B must be >= 1");
    }
};

namespace detail {

inline void draw_indices(std::vector<std::size_t>& idx, std::size_t n, std::size_t m,
                         RngStream& rng) {
    idx.resize(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = rng.uniform_index(n);
}

inline Matrix take_rows(const Matrix& x, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), x.cols, 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto row = x.row(idx[i]);
        std::copy(row.begin(), row.end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * x.cols));
    }
    return out;
}

inline Vector take(std::span<const double> v, std::span<const std::size_t> idx) {
    Vector out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

}  // namespace detail

/// Bootstrap ensemble of B students sharing one initialization. The teacher
/// variant relabels the data with the teacher fit before resampling (the OLS
/// fit on (X, y) unless an explicit teacher model is given); the ground-truth
/// variant resamples the original (x, y) pairs. Replicate b resamples through
/// stream child(b); a singular replicate is redrawn once and then fails.
inline StudentEnsemble run_bootstrap(const Matrix& x, std::span<const double> y,
                                     const BootstrapConfig& config, const StudentTrainer& trainer,
                                     const Matrix& x_test, const RngStream& rng,
                                     unsigned threads = 1,
                                     const std::optional<RegressionModel>& teacher = {}) {
    config.validate(x.rows);
    if (y.size() != x.rows) throw DimensionMismatch("run_bootstrap: y length");
    if (std::holds_alternative<MlpTrainerConfig>(trainer) &&
        !std::get<MlpTrainerConfig>(trainer).fixed_init) {
        throw InvalidShape("run_bootstrap: MLP trainer needs a fixed shared initialization");
    }

    Vector labels;
    if (config.variant == BootstrapVariant::teacher_model) {
        if (teacher) {
            labels = predict(*teacher, x);
        } else {
            const Vector theta_t = solve_least_squares(x, y);
            labels = matvec(x, theta_t);
        }
    } else {
        labels.assign(y.begin(), y.end());
    }

    StudentEnsemble ens;
    ens.students.resize(config.B, LinearModel{});
    ens.seeds.resize(config.B, 0);
    ens.predictions = Matrix(config.B, x_test.rows, 0.0);

    parallel_for(config.B, threads, [&](std::size_t b) {
        RngStream replicate = rng.child(b);
        ens.seeds[b] = replicate.stream_id();
        std::vector<std::size_t> idx;
        for (int attempt = 0;; ++attempt) {
            detail::draw_indices(idx, x.rows, config.m, replicate);
            const Matrix x_b = detail::take_rows(x, idx);
            const Vector y_b = detail::take(labels, idx);
            try {
                RegressionModel student = detail::train_student(
                    trainer, x_b, y_b, RngStream(rng.master_seed(), 0));
                const Vector pred = predict(student, x_test);
                for (std::size_t i = 0; i < pred.size(); ++i) ens.predictions(b, i) = pred[i];
                ens.students[b] = std::move(student);
                break;
            } catch (const SingularDesign& e) {
                if (attempt >= 1) {
                    throw SingularDesign("run_bootstrap: replicate " + std::to_string(b) +
                                         " singular after retry: " + e.what());
                }
            }
        }
    });
    return ens;
}

/// Per-test-input prediction variance across the ensemble (divisor B-1);
/// a single-student ensemble yields zeros.
inline Vector predictive_variance(const StudentEnsemble& ensemble, const Matrix& x_test) {
    const std::size_t b = ensemble.students.size();
    Vector var(x_test.rows, 0.0);
    if (b < 2) return var;
    Matrix preds(b, x_test.rows, 0.0);
    for (std::size_t j = 0; j < b; ++j) {
        const Vector p = predict(ensemble.students[j], x_test);
        for (std::size_t i = 0; i < p.size(); ++i) preds(j, i) = p[i];
    }
    for (std::size_t i = 0; i < x_test.rows; ++i) {
        Vector col(b);
        for (std::size_t j = 0; j < b; ++j) col[j] = preds(j, i);
        var[i] = sample_variance(col);
    }
    return var;
}

}  // namespace distlab
