#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "distlab/errors.hpp"
#include "distlab/linalg.hpp"
#include "distlab/matrix.hpp"
#include "distlab/models.hpp"
#include "distlab/parallel.hpp"
#include "distlab/rng.hpp"
#include "distlab/sequence.hpp"
#include "distlab/uncertainty.hpp"

namespace distlab {

enum class DistillMethod { single_response, multi_response, averaging, variance_weighted };

inline const char* method_name(DistillMethod m) {
    switch (m) {
        case DistillMethod::single_response: return "single_response";
        case DistillMethod::multi_response: return "multi_response";
        case DistillMethod::averaging: return "averaging";
        default: return "variance_weighted";
    }
}

struct StrategyConfig {
    DistillMethod method{DistillMethod::single_response};
    std::size_t k{1};
    std::size_t students{1};

    void validate() const {
        if (k < 1) throw InvalidShape("StrategyConfig: k must be >= 1");
        if (students < 1) throw InvalidShape("StrategyConfig: students must be >= 1");
        if (method == DistillMethod::variance_weighted && k < 2)
            throw InsufficientSamples("StrategyConfig: variance_weighted needs k >= 2");
    }
};

/// Per-train-input student statistics from a preliminary ensemble.
struct StudentStats {
    Vector mean;
    Vector variance;
};

struct DistillTargets {
    Vector targets;
    std::optional<std::vector<std::pair<double, double>>> weights;  // (w_T, w_S) per input
    Matrix teacher_sample_matrix;                                   // n x k
    bool zero_variance_fallback{false};
};

constexpr double kVarianceFloor = 1e-12;

/// Builds the distillation target per train input from the n x k teacher
/// sample matrix. multi_response maps to row means here because the
/// least-squares / MSE fit on the k-times replicated rows coincides with the
/// fit on the per-row mean.
inline DistillTargets build_targets(const Matrix& samples, DistillMethod method,
                                    const std::optional<StudentStats>& student_stats = {}) {
    const std::size_t n = samples.rows;
    const std::size_t k = samples.cols;
    if (k < 1) throw InsufficientSamples("build_targets: k must be >= 1");

    DistillTargets out;
    out.teacher_sample_matrix = samples;
    out.targets.assign(n, 0.0);

    switch (method) {
        case DistillMethod::single_response:
            for (std::size_t i = 0; i < n; ++i) out.targets[i] = samples(i, 0);
            return out;
        case DistillMethod::multi_response:
        case DistillMethod::averaging:
            for (std::size_t i = 0; i < n; ++i) out.targets[i] = mean(samples.row(i));
            return out;
        case DistillMethod::variance_weighted:
            break;
    }

    if (k < 2) throw InsufficientSamples("build_targets: variance_weighted needs k >= 2");
    if (!student_stats) {
        throw InsufficientSamples("build_targets: variance_weighted needs student stats");
    }
    if (student_stats->mean.size() != n || student_stats->variance.size() != n)
        throw DimensionMismatch("build_targets: student stats length");

    out.weights.emplace();
    out.weights->reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double mu_t = mean(samples.row(i));
        const double raw_t = sample_variance(samples.row(i));
        const double raw_s = student_stats->variance[i];
        double w_t;
        if (raw_t <= 0.0 && raw_s <= 0.0) {
            w_t = 0.5;
            out.zero_variance_fallback = true;
        } else {
            const double var_t = std::max(raw_t, kVarianceFloor);
            const double var_s = std::max(raw_s, kVarianceFloor);
            w_t = (1.0 / var_t) / (1.0 / var_t + 1.0 / var_s);
        }
        const double w_s = 1.0 - w_t;
        out.targets[i] = w_t * mu_t + w_s * student_stats->mean[i];
        out.weights->emplace_back(w_t, w_s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regression ensembles
// ---------------------------------------------------------------------------

struct LinearTrainer {};

struct MlpTrainerConfig {
    std::vector<std::size_t> hidden{64};
    Activation activation{Activation::relu};
    std::size_t epochs{2000};
    double lr{0.01};
    std::optional<MlpModel> fixed_init;  // fresh Kaiming init per student when absent
};

using StudentTrainer = std::variant<LinearTrainer, MlpTrainerConfig>;

/// The slice of a dataset an ensemble needs.
struct RegressionTask {
    Matrix x_train;
    Matrix x_test;
    double var_y{0.0};  // sample variance of train targets (fraction-mode noise)
};

struct StudentEnsemble {
    std::vector<RegressionModel> students;
    std::vector<std::uint64_t> seeds;  // per-student stream ids
    Matrix predictions;                // p x n_test
};

namespace detail {

inline RegressionModel train_student(const StudentTrainer& trainer, const Matrix& x_train,
                                     std::span<const double> targets, RngStream&& init_rng) {
    if (std::holds_alternative<LinearTrainer>(trainer)) {
        return LinearModel{solve_least_squares(x_train, targets)};
    }
    const auto& cfg = std::get<MlpTrainerConfig>(trainer);
    MlpModel init;
    if (cfg.fixed_init) {
        init = *cfg.fixed_init;
    } else {
        std::vector<std::size_t> sizes;
        sizes.push_back(x_train.cols);
        sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
        sizes.push_back(1);
        init = init_mlp(sizes, init_rng, cfg.activation);
    }
    return train_mlp(init, x_train, targets, cfg.epochs, cfg.lr);
}

}  // namespace detail

/// Independently distilled students: student j draws fresh teacher responses
/// through stream j, trains, and predicts on the shared test inputs.
inline StudentEnsemble distill_ensemble(const RegressionModel& teacher, const RegressionTask& task,
                                        const NoiseSpec& noise, const StrategyConfig& strategy,
                                        const StudentTrainer& trainer, std::uint64_t master_seed,
                                        unsigned threads = 1) {
    strategy.validate();
    const std::size_t p = strategy.students;

    // Preliminary single-response ensemble (p0 = 32) supplies the per-input
    // student stats the variance-weighted targets need.
    std::optional<StudentStats> stats;
    if (strategy.method == DistillMethod::variance_weighted) {
        constexpr std::size_t p0 = 32;
        Matrix prelim(p0, task.x_train.rows, 0.0);
        for (std::size_t j = 0; j < p0; ++j) {
            RngStream draw(master_seed, mix_streams(stream_domain::kPreliminary, j));
            const Matrix samples = teacher_respond(teacher, task.x_train, noise, 1, draw,
                                                   task.var_y);
            const DistillTargets t = build_targets(samples, DistillMethod::single_response);
            const RegressionModel student = detail::train_student(
                trainer, task.x_train, t.targets,
                RngStream(master_seed, mix_streams(stream_domain::kPreliminary ^ 0xff, j)));
            const Vector pred = predict(student, task.x_train);
            for (std::size_t i = 0; i < pred.size(); ++i) prelim(j, i) = pred[i];
        }
        StudentStats s;
        s.mean.assign(task.x_train.rows, 0.0);
        s.variance.assign(task.x_train.rows, 0.0);
        for (std::size_t i = 0; i < task.x_train.rows; ++i) {
            Vector col(p0);
            for (std::size_t j = 0; j < p0; ++j) col[j] = prelim(j, i);
            s.mean[i] = mean(col);
            s.variance[i] = sample_variance(col);
        }
        stats = std::move(s);
    }

    StudentEnsemble ens;
    ens.students.resize(p, LinearModel{});
    ens.seeds.resize(p, 0);
    ens.predictions = Matrix(p, task.x_test.rows, 0.0);

    parallel_for(p, threads, [&](std::size_t j) {
        try {
            const std::uint64_t draw_stream = mix_streams(stream_domain::kTeacherDraw, j);
            RngStream draw(master_seed, draw_stream);
            const Matrix samples =
                teacher_respond(teacher, task.x_train, noise, strategy.k, draw, task.var_y);
            const DistillTargets targets = build_targets(samples, strategy.method, stats);
            RegressionModel student = detail::train_student(
                trainer, task.x_train, targets.targets,
                RngStream(master_seed, mix_streams(stream_domain::kStudentInit, j)));
            const Vector pred = predict(student, task.x_test);
            for (std::size_t i = 0; i < pred.size(); ++i) ens.predictions(j, i) = pred[i];
            ens.students[j] = std::move(student);
            ens.seeds[j] = draw_stream;
        } catch (const SingularDesign& e) {
            throw SingularDesign("distill_ensemble: student " + std::to_string(j) + ": " +
                                 e.what());
        } catch (const std::exception& e) {
            throw NonFiniteLoss("distill_ensemble: student " + std::to_string(j) + ": " +
                                e.what());
        }
    });
    return ens;
}

// ---------------------------------------------------------------------------
// Sequence-model ensembles
// ---------------------------------------------------------------------------

struct SequenceStudentEnsemble {
    std::vector<CategoricalSequenceModel> students;
    std::vector<std::uint64_t> seeds;
};

struct SequenceTrainConfig {
    std::size_t epochs{150};
    double lr{0.1};
    std::size_t student_dispersion_samples{10};  // variance_weighted phase-2 estimate
};

namespace detail {

/// Phase-2 target of the variance-weighted sequence strategy: per prompt,
/// inverse-dispersion weights blend the teacher empirical next-token
/// distribution with the current student's own distribution at the visited
/// contexts.
inline std::vector<ContextTarget> variance_weighted_targets(
    const CategoricalSequenceModel& current, const std::vector<TokenSeq>& prompts,
    const std::vector<std::vector<TokenSeq>>& teacher_samples, const SequenceTrainConfig& cfg,
    RngStream& rng) {
    std::vector<ContextTarget> merged;
    for (std::size_t p = 0; p < prompts.size(); ++p) {
        const double disp_t = dispersion(teacher_samples[p], current.vocab_size);
        const auto student_draws = sample_sequences(current, prompts[p], 1.0,
                                                    cfg.student_dispersion_samples, rng);
        const double disp_s = dispersion(student_draws, current.vocab_size);
        double w_t;
        if (disp_t <= 0.0 && disp_s <= 0.0) {
            w_t = 0.5;
        } else {
            const double vt = std::max(disp_t, kVarianceFloor);
            const double vs = std::max(disp_s, kVarianceFloor);
            w_t = (1.0 / vt) / (1.0 / vt + 1.0 / vs);
        }
        auto targets = empirical_context_targets(current, prompts[p], teacher_samples[p]);
        for (auto& t : targets) {
            const Vector own = next_token_distribution(current, t.context);
            for (std::size_t v = 0; v < t.dist.size(); ++v)
                t.dist[v] = w_t * t.dist[v] + (1.0 - w_t) * own[v];
            merged.push_back(std::move(t));
        }
    }
    return merged;
}

}  // namespace detail

/// Distills p sequence students. single/multi train on raw samples via
/// L^(k); averaging trains on the per-prompt empirical next-token targets;
/// variance_weighted bootstraps on those targets for half the epochs, then
/// blends teacher and current-student distributions by inverse dispersion.
inline SequenceStudentEnsemble distill_sequence_student_ensemble(
    const CategoricalSequenceModel& teacher, const std::vector<TokenSeq>& prompts,
    const StrategyConfig& strategy, const CategoricalSequenceModel& student_init,
    double teacher_temperature, const SequenceTrainConfig& train_cfg, std::uint64_t master_seed,
    unsigned threads = 1) {
    strategy.validate();
    const std::size_t p = strategy.students;

    SequenceStudentEnsemble ens;
    ens.students.resize(p);
    ens.seeds.resize(p, 0);

    parallel_for(p, threads, [&](std::size_t j) {
        const std::uint64_t draw_stream = mix_streams(stream_domain::kSequenceSample, j);
        RngStream draw(master_seed, draw_stream);
        std::vector<std::vector<TokenSeq>> samples(prompts.size());
        for (std::size_t q = 0; q < prompts.size(); ++q) {
            samples[q] =
                sample_sequences(teacher, prompts[q], teacher_temperature, strategy.k, draw);
        }

        CategoricalSequenceModel student;
        switch (strategy.method) {
            case DistillMethod::single_response:
            case DistillMethod::multi_response: {
                student = train_sequence_student(student_init, prompts, samples,
                                                 train_cfg.epochs, train_cfg.lr);
                break;
            }
            case DistillMethod::averaging: {
                std::vector<ContextTarget> targets;
                for (std::size_t q = 0; q < prompts.size(); ++q) {
                    auto t = empirical_context_targets(student_init, prompts[q], samples[q]);
                    targets.insert(targets.end(), std::make_move_iterator(t.begin()),
                                   std::make_move_iterator(t.end()));
                }
                student = train_sequence_to_targets(student_init, targets, train_cfg.epochs,
                                                    train_cfg.lr);
                break;
            }
            case DistillMethod::variance_weighted: {
                std::vector<ContextTarget> warm;
                for (std::size_t q = 0; q < prompts.size(); ++q) {
                    auto t = empirical_context_targets(student_init, prompts[q], samples[q]);
                    warm.insert(warm.end(), std::make_move_iterator(t.begin()),
                                std::make_move_iterator(t.end()));
                }
                const std::size_t half = std::max<std::size_t>(1, train_cfg.epochs / 2);
                CategoricalSequenceModel phase1 =
                    train_sequence_to_targets(student_init, warm, half, train_cfg.lr);
                RngStream disp_rng(master_seed, mix_streams(stream_domain::kEval, j));
                const auto blended = detail::variance_weighted_targets(phase1, prompts, samples,
                                                                       train_cfg, disp_rng);
                student = train_sequence_to_targets(
                    phase1, blended, std::max<std::size_t>(1, train_cfg.epochs - half),
                    train_cfg.lr);
                break;
            }
        }
        ens.students[j] = std::move(student);
        ens.seeds[j] = draw_stream;
    });
    return ens;
}

}  // namespace distlab
