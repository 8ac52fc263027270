// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Monte Carlo sizes and tolerances are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "distlab/experiments.hpp"
#include "distlab/gradcheck.hpp"

using namespace distlab;

namespace {

struct Check {
    bool ok{true};
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
    void info(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void criterion_1_noise_linearity(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOptions opts;
    opts.seed = 20260801;
    const nlohmann::json cfg = {{"students", 1000},
                                {"dataset", {{"n", 100}, {"d", 5}}},
                                {"oracle_tolerance", 0.2}};
    const Report rep = run_experiment("teacher-noise-sweep", cfg, opts);
    const double r2 = rep.summary.at("v_inter_fit").at("r_squared").get<double>();
    const double intercept = rep.summary.at("v_inter_fit").at("intercept").get<double>();
    double max_v = 0.0;
    for (const auto& row : rep.rows) max_v = std::max(max_v, row[2].num);
    const double secs = elapsed_s(t0);
    c.require(rep.rows.size() == 9, "expected 9 alpha grid points");
    c.require(r2 >= 0.98, "fit r2 " + format_number(r2) + " < 0.98");
    c.require(std::abs(intercept) <= 0.05 * max_v,
              "intercept " + format_number(intercept) + " vs 5% of max v_inter " +
                  format_number(0.05 * max_v));
    c.require(secs <= 60.0, "runtime " + format_number(secs) + "s > 60s");
    c.info("r2 " + format_number(r2) + ", intercept/max " +
           format_number(std::abs(intercept) / max_v) + ", " + format_number(secs) + "s");
}

void criterion_2_mse_vs_teacher_oracle(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset ds = synth_regression(125, 5, Vector{1.0, -0.5, 2.0, 0.25, -1.5}, 0.3, 41);
    const RegressionTask task = ds.regression_task();
    const Vector y_train = ds.train_y();
    const RegressionModel teacher = LinearModel{solve_least_squares(task.x_train, y_train)};
    const Vector teacher_test = predict(teacher, task.x_test);

    const StrategyConfig strategy{DistillMethod::single_response, 1, 10000};
    const StudentEnsemble ens = distill_ensemble(teacher, task, NoiseSpec::direct(1.0), strategy,
                                                 LinearTrainer{}, 42, 2);
    double mean_mse = 0.0;
    for (std::size_t j = 0; j < ens.predictions.rows; ++j)
        mean_mse += eval_mse(ens.predictions.row(j), teacher_test);
    mean_mse /= double(ens.predictions.rows);
    const double oracle = oracles::expected_mse_vs_teacher(1.0, task.x_train, task.x_test);
    const double rel = std::abs(mean_mse - oracle) / oracle;
    const double secs = elapsed_s(t0);
    c.require(rel <= 0.03, "rel err " + format_number(rel) + " > 3%");
    c.require(secs <= 60.0, "runtime " + format_number(secs) + "s > 60s");
    c.info("mc " + format_number(mean_mse) + " vs oracle " + format_number(oracle) + " (rel " +
           format_number(rel) + ")");
}

void criterion_3_mse_vs_truth_oracle(Check& c) {
    RngStream xrng(43, 0);
    const Matrix x = gaussian_matrix(xrng, 90, 4, 0.0, 1.0);
    const Matrix x_test = gaussian_matrix(xrng, 40, 4, 0.0, 1.0);
    const Vector theta_t{1.0, -1.0, 0.5, 2.0};
    const Vector theta_star{0.8, -1.2, 0.9, 1.7};
    const double sigma_t = 0.5, sigma_eta = 0.3;

    const Vector clean = matvec(x, theta_t);
    const Vector truth_mean = matvec(x_test, theta_star);
    RngStream noise(44, 0);
    double total = 0.0;
    const std::size_t draws = 10000;
    for (std::size_t r = 0; r < draws; ++r) {
        Vector y = clean;
        for (double& v : y) v += noise.normal(0.0, sigma_t);
        const Vector est = solve_least_squares(x, y);
        Vector y_true = truth_mean;
        for (double& v : y_true) v += noise.normal(0.0, sigma_eta);
        total += eval_mse(matvec(x_test, est), y_true);
    }
    const double mc = total / double(draws);
    const double oracle = oracles::expected_mse_vs_truth(theta_t, theta_star, sigma_t * sigma_t,
                                                         sigma_eta * sigma_eta, x, x_test);
    const double rel = std::abs(mc - oracle) / oracle;
    c.require(rel <= 0.03, "three-term rel err " + format_number(rel) + " > 3%");

    // theta_T = theta*, sigma_T = 0 recovers the irreducible noise
    RngStream noise2(45, 0);
    double total2 = 0.0;
    const Vector est0 = solve_least_squares(x, matvec(x, theta_star));
    for (std::size_t r = 0; r < draws; ++r) {
        Vector y_true = matvec(x_test, theta_star);
        for (double& v : y_true) v += noise2.normal(0.0, sigma_eta);
        total2 += eval_mse(matvec(x_test, est0), y_true);
    }
    const double mc2 = total2 / double(draws);
    const double rel2 = std::abs(mc2 - sigma_eta * sigma_eta) / (sigma_eta * sigma_eta);
    c.require(rel2 <= 0.03, "irreducible-noise rel err " + format_number(rel2) + " > 3%");
    c.info("three-term rel " + format_number(rel) + ", sigma_eta^2 rel " + format_number(rel2));
}

void criterion_4_bootstrap_degeneracy(Check& c) {
    const Dataset ds = synth_regression(200, 6, Vector{1, 2, -1, 0.5, 1.5, -2}, 0.8, 46);
    const Matrix x = ds.train_x();
    const Vector y = ds.train_y();
    const Vector theta_t = solve_least_squares(x, y);

    for (std::size_t m : {std::size_t(40), std::size_t(80), x.rows}) {
        BootstrapConfig cfg;
        cfg.variant = BootstrapVariant::teacher_model;
        cfg.m = m;
        cfg.B = 200;
        const RngStream rng(47, m);
        const StudentEnsemble ens = run_bootstrap(x, y, cfg, LinearTrainer{}, ds.test_x(), rng, 2);
        double max_dev = 0.0;
        for (const auto& s : ens.students) {
            const auto& theta = std::get<LinearModel>(s).theta;
            for (std::size_t i = 0; i < theta.size(); ++i)
                max_dev = std::max(max_dev, std::abs(theta[i] - theta_t[i]));
        }
        double max_var = 0.0;
        for (double v : predictive_variance(ens, ds.test_x())) max_var = std::max(max_var, v);
        c.require(max_var < 1e-18,
                  "m=" + std::to_string(m) + " pred var " + format_number(max_var));
        c.require(max_dev < 1e-10,
                  "m=" + std::to_string(m) + " param deviation " + format_number(max_dev));
    }
}

struct BootstrapSweepResult {
    std::vector<double> ms;
    std::vector<double> mean_vars;
    std::vector<double> mean_mses;
    std::vector<double> oracle_vars;
    std::vector<double> oracle_mses;
};

BootstrapSweepResult run_groundtruth_sweep(std::size_t B) {
    const double sigma = 1.0;
    // the test split must be large: the realized test-noise level shifts every
    // measured MSE, and it only concentrates around sigma^2 with many rows
    const Dataset ds = synth_regression(4000, 8,
                                        Vector{1.0, -0.5, 2.0, 0.25, -1.5, 0.75, 1.25, -0.25},
                                        sigma, 48);
    const Matrix x = ds.train_x();
    const Vector y = ds.train_y();
    const Matrix x_test = ds.test_x();
    const Vector y_test = ds.test_y();
    const std::size_t n = x.rows;

    Matrix sigma_x = gram(x);
    for (double& v : sigma_x.data) v /= double(n);
    const Matrix l = cholesky(sigma_x);
    double mean_quad = 0.0;
    for (std::size_t i = 0; i < x_test.rows; ++i) mean_quad += quad_form_inv(l, x_test.row(i));
    mean_quad /= double(x_test.rows);

    BootstrapSweepResult out;
    for (double beta = 0.1; beta <= 1.0 + 1e-9; beta += 0.1) {
        const std::size_t m = static_cast<std::size_t>(std::lround(beta * double(n)));
        BootstrapConfig cfg;
        cfg.variant = BootstrapVariant::ground_truth;
        cfg.m = m;
        cfg.B = B;
        const RngStream rng(49, m);
        const StudentEnsemble ens = run_bootstrap(x, y, cfg, LinearTrainer{}, x_test, rng, 2);
        out.ms.push_back(double(m));
        out.mean_vars.push_back(mean(predictive_variance(ens, x_test)));
        double mse = 0.0;
        for (std::size_t b = 0; b < B; ++b) mse += eval_mse(ens.predictions.row(b), y_test);
        out.mean_mses.push_back(mse / double(B));
        out.oracle_vars.push_back(sigma * sigma / double(m) * mean_quad);
        out.oracle_mses.push_back(oracles::bootstrap_mse(sigma * sigma, x.cols, m));
    }
    return out;
}

void criterion_5_bootstrap_variance_scaling(Check& c, const BootstrapSweepResult& sweep, double secs) {
    Vector log_m, log_v;
    for (std::size_t i = 0; i < sweep.ms.size(); ++i) {
        log_m.push_back(std::log(sweep.ms[i]));
        log_v.push_back(std::log(sweep.mean_vars[i]));
    }
    const auto fit = detail::fit_line(log_m, log_v);
    c.require(fit.slope >= -1.15 && fit.slope <= -0.85,
              "log-log slope " + format_number(fit.slope) + " outside [-1.15, -0.85]");
    const double n = sweep.ms.back();
    double worst = 0.0;
    for (std::size_t i = 0; i < sweep.ms.size(); ++i) {
        if (sweep.ms[i] < 0.3 * n) continue;
        const double rel = std::abs(sweep.mean_vars[i] - sweep.oracle_vars[i]) /
                           sweep.oracle_vars[i];
        worst = std::max(worst, rel);
        c.require(rel <= 0.2, "m=" + format_number(sweep.ms[i]) + " var rel err " +
                                  format_number(rel) + " > 20%");
    }
    c.require(secs <= 300.0, "runtime " + format_number(secs) + "s > 5min");
    c.info("slope " + format_number(fit.slope) + ", worst var rel err " + format_number(worst) +
           ", " + format_number(secs) + "s");
}

void criterion_6_bootstrap_mse(Check& c, const BootstrapSweepResult& sweep) {
    const double n = sweep.ms.back();
    double worst = 0.0;
    for (std::size_t i = 0; i < sweep.ms.size(); ++i) {
        if (sweep.ms[i] < 0.3 * n) continue;
        const double rel = std::abs(sweep.mean_mses[i] - sweep.oracle_mses[i]) /
                           sweep.oracle_mses[i];
        worst = std::max(worst, rel);
        c.require(rel <= 0.1, "m=" + format_number(sweep.ms[i]) + " mse rel err " +
                                  format_number(rel) + " > 10%");
    }
    std::size_t inversions = 0;
    for (std::size_t i = 1; i < sweep.mean_mses.size(); ++i)
        inversions += sweep.mean_mses[i] > sweep.mean_mses[i - 1];
    c.require(inversions <= 1,
              std::to_string(inversions) + " increases along m (at most one allowed)");
    c.info("worst mse rel err " + format_number(worst) + ", inversions " +
           std::to_string(inversions));
}

void criterion_7_averaging_decay_umvue(Check& c) {
    // part 1: averaged-target student prediction variance ratio k=1 : k=4
    const Dataset ds = synth_regression(125, 5, Vector{1.0, -0.5, 2.0, 0.25, -1.5}, 0.3, 50);
    const RegressionTask task = ds.regression_task();
    const Vector y_train = ds.train_y();
    const RegressionModel teacher = LinearModel{solve_least_squares(task.x_train, y_train)};
    double v_by_k[2] = {0.0, 0.0};
    const std::size_t rebuilds = 10000;
    std::size_t idx = 0;
    for (std::size_t k : {1ul, 4ul}) {
        const StrategyConfig strategy{DistillMethod::averaging, k, rebuilds};
        const StudentEnsemble ens = distill_ensemble(teacher, task, NoiseSpec::direct(1.0),
                                                     strategy, LinearTrainer{}, 51 + k, 2);
        v_by_k[idx++] = inter_student_variance(ens.predictions);
    }
    const double ratio = v_by_k[0] / v_by_k[1];
    c.require(ratio >= 3.4 && ratio <= 4.6,
              "variance ratio k1:k4 " + format_number(ratio) + " outside [3.4, 4.6]");

    // part 2: the sample mean is the minimum-variance unbiased affine combination
    const std::size_t k = 4;
    RngStream wrng(52, 0);
    std::vector<Vector> weights;
    for (int w = 0; w < 100; ++w) {
        Vector wv(k);
        double total = 0.0;
        for (double& v : wv) {
            v = wrng.normal(1.0, 0.6);
            total += v;
        }
        // renormalize to an unbiased (affine) combination
        if (std::abs(total) < 0.25) total = total < 0 ? -0.25 : 0.25;
        for (double& v : wv) v /= total;
        weights.push_back(std::move(wv));
    }
    Vector sum(101, 0.0), sumsq(101, 0.0);
    RngStream draw(53, 0);
    for (std::size_t r = 0; r < rebuilds; ++r) {
        Vector draws(k);
        for (double& d : draws) d = draw.normal(0.0, 1.0);
        const double m = mean(draws);
        sum[0] += m;
        sumsq[0] += m * m;
        for (std::size_t w = 0; w < weights.size(); ++w) {
            const double combo = dot(weights[w], draws);
            sum[w + 1] += combo;
            sumsq[w + 1] += combo * combo;
        }
    }
    auto var_of = [&](std::size_t i) {
        const double m = sum[i] / double(rebuilds);
        return (sumsq[i] - double(rebuilds) * m * m) / double(rebuilds - 1);
    };
    const double mean_var = var_of(0);
    for (std::size_t w = 1; w <= weights.size(); ++w) {
        c.require(mean_var <= var_of(w),
                  "affine combination " + std::to_string(w - 1) + " beat the sample mean");
    }
    c.info("ratio " + format_number(ratio) + ", mean-target var " + format_number(mean_var));
}

void criterion_8_inverse_variance_weights(Check& c) {
    RngStream rng(54, 0);
    const std::size_t grid = 10000;
    for (int pair_idx = 0; pair_idx < 1000; ++pair_idx) {
        const double vt = 0.02 + 4.0 * rng.uniform();
        const double vs = 0.02 + 4.0 * rng.uniform();
        const auto [wt, ws] = oracles::optimal_weights(vt, vs);
        const double formula = wt * wt * vt + ws * ws * vs;
        double grid_best = 1e300;
        for (std::size_t g = 0; g <= grid; ++g) {
            const double w = double(g) / double(grid);
            grid_best = std::min(grid_best, w * w * vt + (1.0 - w) * (1.0 - w) * vs);
        }
        // the closed form is the global minimum: the grid may only lose, and
        // by no more than the quadratic sweep of one grid cell
        c.require(formula <= grid_best + 1e-12, "grid beat the closed form");
        const double cell = 1.0 / double(grid);
        c.require(grid_best - formula <= (vt + vs) * cell * cell,
                  "grid minimum further than grid resolution from the formula");

        const double combo = oracles::min_combined_variance(vt, vs, 1);
        c.require(combo < std::min(vt, vs), "combined variance not below both sources");
    }
    const double v = 0.37;
    c.require(std::abs(oracles::min_combined_variance(v, v, 1) - v / 2.0) <= 1e-12,
              "equal-variance case does not halve");
    c.info("1000 variance pairs x 10^4-point grid");
}

void criterion_9_entropy_suppression(Check& c) {
    RunOptions opts;
    opts.seed = 20260802;
    opts.threads = 2;
    const Report rep = run_experiment("sequence-suppression", nlohmann::json::object(), opts);
    for (const auto& row : rep.rows) {
        const double tau = row[0].num;
        c.require(row[3].num == 1.0,
                  "tau " + format_number(tau) + ": entropy inequality violated on subset");
        c.require(row[2].num >= 0.9, "tau " + format_number(tau) + ": assumption fraction " +
                                         format_number(row[2].num) + " < 0.9");
    }
    double min_assumption = 1.0;
    for (const auto& row : rep.rows) min_assumption = std::min(min_assumption, row[2].num);
    c.info("500 prompts x 6 temperatures, min assumption fraction " +
           format_number(min_assumption));
}

void criterion_10_entropy_overlap(Check& c) {
    RunOptions opts;
    opts.seed = 20260803;
    const nlohmann::json cfg = {{"family", "both"},
                                {"dataset", {{"n", 1200}, {"separation", 9.0}}}};
    const Report rep = run_experiment("entropy-compare", cfg, opts);
    c.require(rep.rows.size() == 6, "expected 6 rows (2 families x 3 groups)");
    for (const auto& row : rep.rows) {
        const std::string family = row[0].text;
        const std::string group = row[1].text;
        c.require(std::abs(row[9].num - row[10].num) <= 0.005,
                  family + ": accuracies differ by more than 0.5%");
        c.require(row[8].num == 1.0, family + "/" + group + ": intervals do not overlap");
    }
}

void criterion_11_noise_trend(Check& c) {
    std::size_t passes = 0;
    const std::size_t runs = 20;
    for (std::size_t s = 0; s < runs; ++s) {
        RunOptions opts;
        opts.seed = 9100 + s;
        opts.threads = 2;
        const Report rep = run_experiment("sequence-noise", nlohmann::json::object(), opts);
        double ss = 0, sa = 0, sv = 0, rs = 0, ra = 0, rv = 0;
        for (const auto& row : rep.rows) {
            const std::string m = row[0].text;
            if (m == "single_response") {
                ss = row[5].num;
                rs = row[3].num;
            }
            if (m == "averaging") {
                sa = row[5].num;
                ra = row[3].num;
            }
            if (m == "variance_weighted") {
                sv = row[5].num;
                rv = row[3].num;
            }
        }
        passes += (sa < ss && sv < ss && ra > rs && rv > rs);
    }
    c.require(passes >= runs * 8 / 10, "trend held in only " + std::to_string(passes) + "/20 runs");
    c.info("trend held in " + std::to_string(passes) + "/20 seeded runs");
}

void criterion_12_determinism(Check& c) {
    const std::vector<std::pair<std::string, nlohmann::json>> configs = {
        {"teacher-noise-sweep", {{"students", 20}, {"alpha_grid", {0.0, 1.0}}}},
        {"init-noise-sweep",
         {{"students", 3}, {"epochs", 30}, {"teacher_epochs", 40},
          {"sigma_init_grid", {0.0, 0.2}}}},
        {"bootstrap-sweep",
         {{"replicates", 20}, {"beta_grid", {0.5, 1.0}}, {"enforce_tolerances", false}}},
        {"entropy-compare", {{"family", "logistic"}, {"dataset", {{"n", 300}}}}},
        {"variance-aware-sweep",
         {{"students", 30}, {"k_grid", {1, 2}}, {"oracle_tolerance", 5.0}}},
        {"sequence-suppression",
         {{"prompts", 15}, {"students_per_prompt", 4}, {"tau_grid", {1.0}}, {"epochs", 60}}},
        {"sequence-noise", {{"prompts", 10}, {"students", 4}, {"epochs", 8}}}};
    for (const auto& [name, cfg] : configs) {
        RunOptions a;
        a.seed = 777;
        a.threads = 1;
        RunOptions b = a;
        b.threads = 3;
        const std::string csv_a = report_csv(run_experiment(name, cfg, a));
        const std::string csv_b = report_csv(run_experiment(name, cfg, b));
        c.require(csv_a == csv_b, name + ": csv differs across thread counts");
        const std::string csv_c = report_csv(run_experiment(name, cfg, a));
        c.require(csv_a == csv_c, name + ": csv differs across reruns");
    }
    c.info("7 experiments, reruns and thread counts 1 vs 3");
}

void criterion_13_gradient_integrity(Check& c) {
    RngStream rng(55, 0);
    double worst_mlp = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 2 + rng.uniform_index(3);
        const std::size_t h = 3 + rng.uniform_index(4);
        const std::size_t n = 5 + rng.uniform_index(6);
        const Activation act = rng.uniform() < 0.5 ? Activation::relu : Activation::tanh;
        RngStream init_rng(56, trial);
        const MlpModel shape = init_mlp({d, h, 1}, init_rng, act);
        const Matrix x = gaussian_matrix(rng, n, d, 0.0, 1.0);
        Vector targets(n);
        for (double& t : targets) t = rng.normal();
        Vector analytic;
        mlp_mse_loss_grad(shape, x, targets, analytic);
        const ScalarFn loss = [&](const Vector& p) {
            Vector unused;
            return mlp_mse_loss_grad(mlp_unflatten(shape, p), x, targets, unused);
        };
        const Vector numeric = finite_diff_grad(loss, mlp_flatten(shape), 1e-5);
        for (std::size_t i = 0; i < numeric.size(); ++i)
            worst_mlp = std::max(worst_mlp, std::abs(numeric[i] - analytic[i]));
    }
    c.require(worst_mlp < 1e-4, "mlp grad max-abs diff " + format_number(worst_mlp));

    double worst_seq = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t vocab = 3 + rng.uniform_index(3);
        const std::size_t order = 1 + rng.uniform_index(2);
        RngStream model_rng(57, trial);
        const CategoricalSequenceModel teacher =
            CategoricalSequenceModel::random(vocab, order, 3, model_rng, 1.0);
        const CategoricalSequenceModel shape =
            CategoricalSequenceModel::random(vocab, order, 3, model_rng, 0.7);
        std::vector<TokenSeq> prompts = {{rng.uniform_index(vocab)}, {}};
        std::vector<std::vector<TokenSeq>> samples;
        RngStream srng(58, trial);
        for (const auto& p : prompts)
            samples.push_back(sample_sequences(teacher, p, 1.0, 1 + rng.uniform_index(3), srng));
        Vector analytic;
        sequence_objective_grad(shape, prompts, samples, analytic);
        const ScalarFn loss = [&](const Vector& params) {
            CategoricalSequenceModel probe = shape;
            probe.logits.data = params;
            Vector unused;
            return sequence_objective_grad(probe, prompts, samples, unused);
        };
        const Vector numeric = finite_diff_grad(loss, shape.logits.data, 1e-5);
        for (std::size_t i = 0; i < numeric.size(); ++i)
            worst_seq = std::max(worst_seq, std::abs(numeric[i] - analytic[i]));
    }
    c.require(worst_seq < 1e-4, "sequence grad max-abs diff " + format_number(worst_seq));
    c.info("100 randomized instances, worst diffs mlp " + format_number(worst_mlp) + " seq " +
           format_number(worst_seq));
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<void(Check&)>& fn) {
        Check c;
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %2d: %s%s%s\n", c.ok ? "PASS" : "FAIL", id, name.c_str(),
                    c.detail.empty() ? "" : " - ", c.detail.c_str());
        std::fflush(stdout);
        failures += !c.ok;
    };

    BootstrapSweepResult sweep;
    double sweep_secs = 0.0;
    {
        const auto t0 = std::chrono::steady_clock::now();
        sweep = run_groundtruth_sweep(1000);
        sweep_secs = elapsed_s(t0);
    }

    report(1, "inter-student variance grows linearly in teacher noise",
           criterion_1_noise_linearity);
    report(2, "expected MSE against the teacher matches the trace formula", criterion_2_mse_vs_teacher_oracle);
    report(3, "expected MSE against ground truth matches the three-term formula",
           criterion_3_mse_vs_truth_oracle);
    report(4, "teacher-model bootstrap is degenerate for realizable students", criterion_4_bootstrap_degeneracy);
    report(5, "ground-truth bootstrap variance scales as 1/m",
           [&](Check& c) { criterion_5_bootstrap_variance_scaling(c, sweep, sweep_secs); });
    report(6, "ground-truth bootstrap test MSE matches sigma^2 (1 + d/m)",
           [&](Check& c) { criterion_6_bootstrap_mse(c, sweep); });
    report(7, "averaged targets decay as 1/k and the sample mean is optimal", criterion_7_averaging_decay_umvue);
    report(8, "inverse-variance weights beat a dense grid search", criterion_8_inverse_variance_weights);
    report(9, "sequence entropy suppression inequality on enumerable toys",
           criterion_9_entropy_suppression);
    report(10, "teacher and student entropy intervals overlap per group",
           criterion_10_entropy_overlap);
    report(11, "averaging and variance-weighting beat single-response on noise",
           criterion_11_noise_trend);
    report(12, "byte-identical reports across reruns and thread counts",
           criterion_12_determinism);
    report(13, "analytic gradients match central finite differences", criterion_13_gradient_integrity);

    if (failures == 0) {
        std::printf("all 13 acceptance criteria passed\n");
    } else {
        std::printf("%d acceptance criteria FAILED\n", failures);
    }
    return failures;
}
