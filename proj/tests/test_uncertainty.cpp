#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "distlab/data.hpp"
#include "distlab/sequence.hpp"
#include "distlab/uncertainty.hpp"

using namespace distlab;

TEST_CASE("inter_student_variance hand values and permutation invariance") {
    Matrix same(4, 6, 1.25);
    CHECK(inter_student_variance(same) == 0.0);

    Matrix pair(2, 3, 0.0);
    for (std::size_t i = 0; i < 3; ++i) pair(1, i) = 2.0;
    CHECK(inter_student_variance(pair) == doctest::Approx(2.0));

    CHECK_THROWS_AS(inter_student_variance(Matrix(1, 4, 0.0)), TooFewStudents);

    RngStream rng(1, 0);
    Matrix preds = gaussian_matrix(rng, 6, 9, 0.0, 1.0);
    const double base = inter_student_variance(preds);

    Matrix row_permuted(6, 9, 0.0);
    // permute students (rows)
    const std::size_t row_perm[6] = {3, 1, 5, 0, 4, 2};
    for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t i = 0; i < 9; ++i) row_permuted(j, i) = preds(row_perm[j], i);
    CHECK(inter_student_variance(row_permuted) == doctest::Approx(base).epsilon(1e-12));

    // permute inputs (columns)
    Matrix colperm(6, 9, 0.0);
    for (std::size_t j = 0; j < 6; ++j)
        for (std::size_t i = 0; i < 9; ++i) colperm(j, i) = preds(j, (i * 4 + 1) % 9);
    CHECK(inter_student_variance(colperm) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("eval_mse basics") {
    CHECK(eval_mse(Vector{1, 2, 3}, Vector{1, 2, 3}) == 0.0);
    CHECK(eval_mse(Vector{4, 5}, Vector{1, 2}) == doctest::Approx(9.0));
    CHECK_THROWS_AS(eval_mse(Vector{1}, Vector{1, 2}), DimensionMismatch);
}

TEST_CASE("predictive entropy values and uniform maximality") {
    CHECK(predictive_entropy(Vector{0.0, 1.0, 0.0}) == 0.0);
    CHECK(predictive_entropy(Vector(10, 0.1)) == doctest::Approx(std::log(10.0)));
    CHECK(predictive_entropy(Vector{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(predictive_entropy(Vector{0.7, 0.7}), NotADistribution);
    CHECK_THROWS_AS(predictive_entropy(Vector{-0.1, 1.1}), NotADistribution);

    RngStream rng(2, 0);
    for (std::size_t classes = 2; classes <= 6; ++classes) {
        const double h_uniform = std::log(double(classes));
        for (int trial = 0; trial < 1000; ++trial) {
            Vector p(classes);
            double total = 0.0;
            for (double& v : p) {
                v = 1e-9 + rng.uniform();
                total += v;
            }
            for (double& v : p) v /= total;
            double spread = 0.0;
            for (double v : p) spread += std::abs(v - 1.0 / double(classes));
            const double h = predictive_entropy(p);
            CHECK(h <= h_uniform + 1e-12);
            if (spread > 1e-3) CHECK(h < h_uniform);
        }
    }
}

TEST_CASE("entropy report grouping") {
    // perfect classifier: nothing lands in the incorrect group
    Matrix proba(4, 2, 0.0);
    std::vector<std::size_t> labels = {0, 1, 0, 1};
    for (std::size_t i = 0; i < 4; ++i) {
        proba(i, labels[i]) = 0.9;
        proba(i, 1 - labels[i]) = 0.1;
    }
    const auto reports = entropy_report_from_proba(proba, labels);
    CHECK(reports[0].count == 4);
    CHECK(reports[1].count == 4);
    CHECK(reports[2].count == 0);
    CHECK(reports[2].mean_entropy == 0.0);
    CHECK(reports[2].std_entropy == 0.0);

    // uniform output: every group mean is ln(classes), std 0
    Matrix uniform(5, 4, 0.25);
    std::vector<std::size_t> ulabels = {0, 1, 2, 3, 0};
    const auto ureports = entropy_report_from_proba(uniform, ulabels);
    CHECK(ureports[0].mean_entropy == doctest::Approx(std::log(4.0)));
    CHECK(ureports[0].std_entropy == doctest::Approx(0.0));

    // interval overlap rule
    EntropyReport a;
    a.count = 10;
    a.mean_entropy = 0.5;
    a.std_entropy = 0.2;
    EntropyReport b = a;
    b.mean_entropy = 0.65;
    CHECK(entropy_intervals_overlap(a, b));
    b.mean_entropy = 1.5;
    CHECK(!entropy_intervals_overlap(a, b));
    b.count = 0;
    CHECK(entropy_intervals_overlap(a, b));
}

TEST_CASE("teacher and hard-label student entropies overlap on separable blobs") {
    const Dataset ds = synth_classification(600, 4, 3, 9.0, 3);
    const Matrix x_train = ds.train_x();
    const Matrix x_test = ds.test_x();
    const auto labels_train = ds.train_labels();
    const auto labels_test = ds.test_labels();

    const LogisticModel teacher = train_logistic(x_train, labels_train, 300, 0.05);
    const auto pseudo = predict_labels(predict_proba(teacher, x_train));
    const LogisticModel student = train_logistic(x_train, pseudo, 300, 0.05);

    const auto rt = entropy_report(teacher, x_test, labels_test);
    const auto rs = entropy_report(student, x_test, labels_test);
    for (std::size_t g = 0; g < 3; ++g) CHECK(entropy_intervals_overlap(rt[g], rs[g]));
}

TEST_CASE("bigram embeddings") {
    const TokenSeq a = {0, 1, 2};
    const TokenSeq b = {0, 1, 2};
    CHECK(embed_sequence(a, 4) == embed_sequence(b, 4));
    CHECK(norm2(embed_sequence(a, 4)) == doctest::Approx(1.0).epsilon(1e-12));

    // disjoint bigram sets -> orthogonal embeddings
    const TokenSeq c = {2, 2, 2};
    const Vector ea = embed_sequence(a, 4);
    const Vector ec = embed_sequence(c, 4);
    CHECK(cosine_similarity(ea, ec) == doctest::Approx(0.0));

    const Vector empty = embed_sequence(TokenSeq{}, 3);
    CHECK(empty[3 * 3 - 1] == 1.0);  // (eos, eos) basis slot
    CHECK(norm2(empty) == 1.0);

    const TokenSeq bad = {9};
    CHECK_THROWS_AS(embed_sequence(bad, 4), InvalidToken);
}

TEST_CASE("cosine similarity endpoints") {
    const Vector a{1.0, 0.0};
    const Vector b{0.0, 2.0};
    Vector na{-3.0, 0.0};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, na) == doctest::Approx(-1.0));
    const Vector zero{0.0, 0.0};
    CHECK_THROWS_AS(cosine_similarity(a, zero), ZeroVector);
}

TEST_CASE("dispersion endpoints and temperature monotonicity trend") {
    const std::vector<TokenSeq> same = {{0, 1}, {0, 1}, {0, 1}};
    CHECK(dispersion(same, 3) == doctest::Approx(0.0));

    const std::vector<TokenSeq> orth = {{0, 0}, {1, 1}};
    CHECK(dispersion(orth, 3) == doctest::Approx(1.0));

    const std::vector<TokenSeq> one = {{0}};
    CHECK_THROWS_AS(dispersion(one, 3), TooFewResponses);

    RngStream rng(4, 0);
    std::size_t hits = 0;
    const std::size_t prompts = 50;
    for (std::size_t p = 0; p < prompts; ++p) {
        RngStream mrng(5, p);
        const CategoricalSequenceModel m =
            CategoricalSequenceModel::random(5, 1, 4, mrng, 1.0);
        RngStream cold_rng(6, p), hot_rng(7, p);
        const auto cold = sample_sequences(m, {}, 0.01, 10, cold_rng);
        const auto hot = sample_sequences(m, {}, 2.0, 10, hot_rng);
        if (dispersion(cold, 5) < dispersion(hot, 5)) ++hits;
    }
    CHECK(hits >= prompts * 9 / 10);
}

TEST_CASE("intra variance gap") {
    const std::vector<TokenSeq> varied = {{0, 1}, {1, 0}, {2, 2}, {0, 2}};
    CHECK(intra_variance_gap(varied, varied, 4) == doctest::Approx(0.0));

    const std::vector<TokenSeq> fixed = {{0, 1}, {0, 1}, {0, 1}};
    CHECK(intra_variance_gap(varied, fixed, 4) > 0.0);
    CHECK_THROWS_AS(intra_variance_gap(varied, {{0}}, 4), TooFewResponses);
}

TEST_CASE("single-sample toy students have suppressed sequence entropy") {
    // across random teachers, on instances satisfying
    // H(E[p_S]) <= H(p_T) the mean student entropy also stays below H(p_T)
    const std::size_t vocab = 4, max_len = 3;
    const auto outcomes = enumerate_outcomes(vocab, max_len);
    const CategoricalSequenceModel shape =
        CategoricalSequenceModel::zeros(vocab, 1, max_len);
    std::size_t assumption_cases = 0;
    for (std::size_t t = 0; t < 100; ++t) {
        RngStream trng(8, t);
        const CategoricalSequenceModel teacher =
            CategoricalSequenceModel::random(vocab, 1, max_len, trng, 1.0);
        const double h_t = predictive_entropy(outcome_probabilities(teacher, {}, outcomes, 1.0));
        Vector mean_ps(outcomes.size(), 0.0);
        double e_h = 0.0;
        const std::size_t students = 10;
        for (std::size_t j = 0; j < students; ++j) {
            RngStream srng(9, t * 100 + j);
            const auto sample = sample_sequences(teacher, {}, 1.0, 1, srng);
            const auto student =
                train_sequence_student(shape, {TokenSeq{}}, {{sample.front()}}, 250, 0.3);
            const Vector ps = outcome_probabilities(student, {}, outcomes, 1.0);
            for (std::size_t o = 0; o < outcomes.size(); ++o) mean_ps[o] += ps[o];
            e_h += predictive_entropy(ps);
        }
        for (double& v : mean_ps) v /= double(students);
        e_h /= double(students);
        // concavity holds unconditionally: mean entropy <= entropy of the mean
        CHECK(e_h <= predictive_entropy(mean_ps) + 1e-12);
        if (predictive_entropy(mean_ps) <= h_t + 1e-12) {
            ++assumption_cases;
            CHECK(e_h <= h_t + 1e-12);
        }
    }
    CHECK(assumption_cases > 50);  // the assumption should hold broadly
}

TEST_CASE("noise decomposition") {
    const Vector teacher = {0.1, 0.3, 0.5, 0.7};
    const Vector baseline = {0.05, 0.1, 0.2, 0.25};

    const NoiseDecomposition self = noise_decomposition(teacher, teacher, baseline);
    CHECK(self.slope == doctest::Approx(1.0));
    CHECK(self.r_squared == doctest::Approx(1.0));

    const NoiseDecomposition base = noise_decomposition(teacher, baseline, baseline);
    CHECK(base.avg_systematic_noise == doctest::Approx(0.0).epsilon(1e-12));

    const Vector constant(4, 0.4);
    CHECK_THROWS_AS(noise_decomposition(constant, teacher, baseline), DegenerateRegression);

    // constant student: no explainable variance
    const NoiseDecomposition flat = noise_decomposition(teacher, constant, baseline);
    CHECK(flat.r_squared == 0.0);

    RngStream rng(10, 0);
    for (int trial = 0; trial < 200; ++trial) {
        Vector t(6), s(6), b(6);
        for (std::size_t i = 0; i < 6; ++i) {
            t[i] = rng.uniform();
            s[i] = rng.uniform();
            b[i] = rng.uniform();
        }
        const NoiseDecomposition d = noise_decomposition(t, s, b);
        CHECK(d.r_squared >= 0.0);
        CHECK(d.r_squared <= 1.0);
        CHECK(std::abs(d.avg_systematic_noise - (mean(s) - mean(b))) < 1e-12);
    }
}
