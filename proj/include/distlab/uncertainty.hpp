#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "distlab/errors.hpp"
#include "distlab/matrix.hpp"
#include "distlab/models.hpp"
#include "distlab/sequence.hpp"

namespace distlab {

/// Mean over test inputs of the across-student prediction variance
/// (predictions is p x n, one student per row; divisor p-1).
inline double inter_student_variance(const Matrix& predictions) {
    const std::size_t p = predictions.rows;
    if (p < 2) throw TooFewStudents("inter_student_variance: need >= 2 students");
    const std::size_t n = predictions.cols;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < p; ++j) m += predictions(j, i);
        m /= static_cast<double>(p);
        double v = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double d = predictions(j, i) - m;
            v += d * d;
        }
        total += v / static_cast<double>(p - 1);
    }
    return total / static_cast<double>(n);
}

inline double eval_mse(std::span<const double> predictions, std::span<const double> reference) {
    if (predictions.size() != reference.size())
        throw DimensionMismatch("eval_mse: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - reference[i];
        s += d * d;
    }
    return s / static_cast<double>(predictions.size());
}

/// Natural-log entropy -sum p log p with 0 log 0 = 0. Renormalizes inputs
/// whose mass is within 1e-6 of one; anything further off is rejected.
inline double predictive_entropy(std::span<const double> proba) {
    double total = 0.0;
    for (double p : proba) {
        if (p < 0.0) throw NotADistribution("predictive_entropy: negative mass");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6)
        throw NotADistribution("predictive_entropy: mass " + std::to_string(total));
    double h = 0.0;
    for (double p : proba) {
        const double q = p / total;
        if (q > 0.0) h -= q * std::log(q);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Predictive-entropy report with the all / correct / incorrect grouping.
// ---------------------------------------------------------------------------
enum class EntropyGroup { all, correct, incorrect };

struct EntropyReport {
    EntropyGroup group{EntropyGroup::all};
    std::size_t count{0};
    double mean_entropy{0.0};
    double std_entropy{0.0};
};

inline const char* entropy_group_name(EntropyGroup g) {
    switch (g) {
        case EntropyGroup::all: return "all";
        case EntropyGroup::correct: return "correct";
        default: return "incorrect";
    }
}

/// Core grouping over an already computed probability matrix.
inline std::vector<EntropyReport> entropy_report_from_proba(
    const Matrix& proba, std::span<const std::size_t> labels) {
    if (proba.rows != labels.size()) throw DimensionMismatch("entropy_report: label count");
    Vector h_all, h_correct, h_incorrect;
    for (std::size_t i = 0; i < proba.rows; ++i) {
        const double h = predictive_entropy(proba.row(i));
        h_all.push_back(h);
        if (argmax(proba.row(i)) == labels[i]) {
            h_correct.push_back(h);
        } else {
            h_incorrect.push_back(h);
        }
    }
    auto make = [](EntropyGroup g, const Vector& v) {
        EntropyReport r;
        r.group = g;
        r.count = v.size();
        r.mean_entropy = v.empty() ? 0.0 : mean(v);
        r.std_entropy = sample_stddev(v);
        return r;
    };
    return {make(EntropyGroup::all, h_all), make(EntropyGroup::correct, h_correct),
            make(EntropyGroup::incorrect, h_incorrect)};
}

inline std::vector<EntropyReport> entropy_report(const LogisticModel& model, const Matrix& x_test,
                                                 std::span<const std::size_t> labels) {
    return entropy_report_from_proba(predict_proba(model, x_test), labels);
}

/// Classifier-head MLP variant (softmax over the network outputs).
inline std::vector<EntropyReport> entropy_report(const MlpModel& model, const Matrix& x_test,
                                                 std::span<const std::size_t> labels) {
    const Matrix logits = mlp_forward(model, x_test);
    Matrix proba(logits.rows, logits.cols, 0.0);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const Vector p = softmax(logits.row(i));
        for (std::size_t c = 0; c < logits.cols; ++c) proba(i, c) = p[c];
    }
    return entropy_report_from_proba(proba, labels);
}

/// Interval-overlap significance rule: H_T +- sigma_T vs H_S +- sigma_S
/// overlapping means "no significant difference". Empty groups count as
/// overlapping (nothing to compare).
inline bool entropy_intervals_overlap(const EntropyReport& teacher, const EntropyReport& student) {
    if (teacher.count == 0 || student.count == 0) return true;
    const double t_lo = teacher.mean_entropy - teacher.std_entropy;
    const double t_hi = teacher.mean_entropy + teacher.std_entropy;
    const double s_lo = student.mean_entropy - student.std_entropy;
    const double s_hi = student.mean_entropy + student.std_entropy;
    return t_lo <= s_hi && s_lo <= t_hi;
}

// ---------------------------------------------------------------------------
// Sequence embeddings and dispersion
// ---------------------------------------------------------------------------

/// L2-normalized bigram-count embedding of dimension V^2. The boundary marker
/// reuses the EOS index (vocab_size - 1), giving every sequence a begin-token
/// bigram (eos -> first token); the empty sequence maps to the unit basis
/// vector at the (eos, eos) slot.
inline Vector embed_sequence(std::span<const std::size_t> seq, std::size_t vocab_size) {
    const std::size_t v = vocab_size;
    const std::size_t boundary = v - 1;
    for (std::size_t t : seq) {
        if (t >= v) throw InvalidToken("embed_sequence: token " + std::to_string(t));
    }
    Vector e(v * v, 0.0);
    if (seq.empty()) {
        e[boundary * v + boundary] = 1.0;
        return e;
    }
    std::size_t prev = boundary;
    for (std::size_t t : seq) {
        e[prev * v + t] += 1.0;
        prev = t;
    }
    const double n = norm2(e);
    for (double& x : e) x /= n;
    return e;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine_similarity: zero-norm input");
    return dot(a, b) / (na * nb);
}

/// Mean pairwise cosine distance (1 - cos) between response embeddings.
inline double dispersion(const std::vector<TokenSeq>& responses, std::size_t vocab_size) {
    if (responses.size() < 2) throw TooFewResponses("dispersion: need >= 2 responses");
    std::vector<Vector> embeddings;
    embeddings.reserve(responses.size());
    for (const auto& r : responses) embeddings.push_back(embed_sequence(r, vocab_size));
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
            total += 1.0 - cosine_similarity(embeddings[i], embeddings[j]);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

/// Mean over embedding coordinates of (teacher sample variance - student
/// sample variance), both with divisor n-1.
inline double intra_variance_gap(const std::vector<TokenSeq>& teacher_samples,
                                 const std::vector<TokenSeq>& student_samples,
                                 std::size_t vocab_size) {
    if (teacher_samples.size() < 2 || student_samples.size() < 2)
        throw TooFewResponses("intra_variance_gap: need >= 2 samples each");
    const std::size_t dim = vocab_size * vocab_size;
    auto coord_variances = [&](const std::vector<TokenSeq>& samples) {
        Matrix emb(samples.size(), dim, 0.0);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Vector e = embed_sequence(samples[i], vocab_size);
            for (std::size_t j = 0; j < dim; ++j) emb(i, j) = e[j];
        }
        Vector v(dim, 0.0);
        for (std::size_t j = 0; j < dim; ++j) {
            Vector col(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i) col[i] = emb(i, j);
            v[j] = sample_variance(col);
        }
        return v;
    };
    const Vector vt = coord_variances(teacher_samples);
    const Vector vs = coord_variances(student_samples);
    double gap = 0.0;
    for (std::size_t j = 0; j < dim; ++j) gap += vt[j] - vs[j];
    return gap / static_cast<double>(dim);
}

// ---------------------------------------------------------------------------
// App-F-style noise decomposition
// ---------------------------------------------------------------------------
struct NoiseDecomposition {
    double slope{0.0};
    double r_squared{0.0};
    double avg_noise{0.0};
    double avg_systematic_noise{0.0};
};

/// OLS of student dispersion against teacher dispersion across prompts, plus
/// average noise and the systematic component (average minus baseline).
inline NoiseDecomposition noise_decomposition(std::span<const double> teacher_dispersions,
                                              std::span<const double> student_dispersions,
                                              std::span<const double> baseline_dispersions) {
    const std::size_t n = teacher_dispersions.size();
    if (n < 3 || student_dispersions.size() != n || baseline_dispersions.size() != n)
        throw DimensionMismatch("noise_decomposition: need >= 3 aligned prompts");

    const double tx = mean(teacher_dispersions);
    const double ty = mean(student_dispersions);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = teacher_dispersions[i] - tx;
        const double dy = student_dispersions[i] - ty;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 1e-300)
        throw DegenerateRegression("noise_decomposition: constant teacher dispersions");

    NoiseDecomposition d;
    d.slope = sxy / sxx;
    // r^2 = corr^2; a constant student series carries no explainable variance
    d.r_squared = syy <= 1e-300 ? 0.0 : (sxy * sxy) / (sxx * syy);
    d.avg_noise = ty;
    d.avg_systematic_noise = ty - mean(baseline_dispersions);
    return d;
}

}  // namespace distlab
