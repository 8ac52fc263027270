#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "distlab/bootstrap.hpp"
#include "distlab/data.hpp"
#include "distlab/distill.hpp"
#include "distlab/errors.hpp"
#include "distlab/models.hpp"
#include "distlab/oracles.hpp"
#include "distlab/report.hpp"
#include "distlab/sequence.hpp"
#include "distlab/serialize.hpp"
#include "distlab/uncertainty.hpp"

namespace distlab {

// ---------------------------------------------------------------------------
// Run options and strict config parsing
// ---------------------------------------------------------------------------

struct RunOptions {
    std::uint64_t seed{1};
    std::string out_dir;
    unsigned threads{1};
    bool paper_scale{false};
};

/// Strict JSON config access: every key must be consumed, unknown keys are
/// configuration errors.
class ConfigReader {
public:
    ConfigReader(const nlohmann::json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
        if (!j_.is_object() && !j_.is_null())
            throw ConfigError(scope_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    double number(const std::string& key, double def) {
        if (!has(key)) return def;
        consumed_.insert(key);
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(scope_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    std::size_t count(const std::string& key, std::size_t def) {
        if (!has(key)) return def;
        consumed_.insert(key);
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError(scope_ + "." + key + ": expected a nonnegative integer");
        return v.get<std::size_t>();
    }

    bool flag(const std::string& key, bool def) {
        if (!has(key)) return def;
        consumed_.insert(key);
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(scope_ + "." + key + ": expected a boolean");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& def) {
        if (!has(key)) return def;
        consumed_.insert(key);
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(scope_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> grid(const std::string& key, std::vector<double> def) {
        if (!has(key)) return def;
        consumed_.insert(key);
        const auto& v = j_.at(key);
        if (!v.is_array() || v.empty())
            throw ConfigError(scope_ + "." + key + ": expected a non-empty array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(scope_ + "." + key + ": expected numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> def) {
        if (!has(key)) return def;
        consumed_.insert(key);
        const auto& v = j_.at(key);
        if (!v.is_array() || v.empty())
            throw ConfigError(scope_ + "." + key + ": expected a non-empty array of integers");
        std::vector<std::size_t> out;
        for (const auto& e : v) {
            if (!e.is_number_integer() || e.get<long long>() < 0)
                throw ConfigError(scope_ + "." + key + ": expected nonnegative integers");
            out.push_back(e.get<std::size_t>());
        }
        return out;
    }

    std::vector<std::string> texts(const std::string& key, std::vector<std::string> def) {
        if (!has(key)) return def;
        consumed_.insert(key);
        const auto& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(scope_ + "." + key + ": expected an array");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError(scope_ + "." + key + ": expected strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    nlohmann::json object(const std::string& key) {
        if (!has(key)) return nlohmann::json();
        consumed_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        if (!j_.is_object()) return;
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            if (!consumed_.count(key))
                throw ConfigError(scope_ + ": unknown key '" + key + "'");
        }
    }

private:
    const nlohmann::json& j_;
    std::string scope_;
    std::set<std::string> consumed_;
};

namespace detail {

inline std::vector<double> linspace_grid(double lo, double hi, double step) {
    std::vector<double> g;
    for (double v = lo; v <= hi + 1e-12; v += step) g.push_back(v);
    return g;
}

struct LineFit {
    double slope{0.0};
    double intercept{0.0};
    double r_squared{0.0};
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionMismatch("fit_line: sizes");
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 1e-300) throw DegenerateRegression("fit_line: constant x");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy <= 1e-300 ? 0.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

inline double relative_error(double mc, double oracle) {
    return std::abs(mc - oracle) / std::max(std::abs(oracle), 1e-12);
}

inline void enforce_tolerance(const std::string& experiment, const std::string& row_name,
                              const std::string& metric, double mc, double oracle,
                              double tolerance) {
    const double rel = relative_error(mc, oracle);
    if (rel > tolerance) {
        throw NumericalFailure(experiment + " [" + row_name + "] " + metric + ": monte carlo " +
                               format_number(mc) + " vs oracle " + format_number(oracle) +
                               " (rel err " + format_number(rel) + " > tolerance " +
                               format_number(tolerance) + ")");
    }
}

/// Mean over students of the eval MSE against a reference vector.
inline double mean_student_mse(const Matrix& predictions, std::span<const double> reference) {
    double total = 0.0;
    for (std::size_t j = 0; j < predictions.rows; ++j)
        total += eval_mse(predictions.row(j), reference);
    return total / static_cast<double>(predictions.rows);
}

/// Inter-student prediction variance predicted from a heterogeneous
/// per-input target variance diag(v): average over test rows of
/// a^T diag(v) a with a = X_train (X^T X)^{-1} x_test.
inline double predicted_v_inter_from_target_variance(const Matrix& x_train, const Matrix& x_test,
                                                     std::span<const double> target_var) {
    const Matrix l = cholesky(gram(x_train));
    double total = 0.0;
    for (std::size_t i = 0; i < x_test.rows; ++i) {
        const Vector w = cholesky_solve(l, x_test.row(i));  // (X^T X)^{-1} x
        const Vector a = matvec(x_train, w);                // X (X^T X)^{-1} x
        double v = 0.0;
        for (std::size_t t = 0; t < a.size(); ++t) v += a[t] * a[t] * target_var[t];
        total += v;
    }
    return total / static_cast<double>(x_test.rows);
}

struct RowSink {
    Report* report;
    std::unique_ptr<CsvWriter> writer;

    void push(std::vector<Cell> cells) {
        if (writer) writer->write_row(cells);
        report->add_row(std::move(cells));
    }
};

inline RowSink make_sink(Report& report, const RunOptions& opts) {
    RowSink sink{&report, nullptr};
    if (!opts.out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(opts.out_dir, ec);
        if (ec) throw IoError("cannot create " + opts.out_dir + ": " + ec.message());
        const auto path = std::filesystem::path(opts.out_dir) / (report.experiment + ".csv");
        sink.writer = std::make_unique<CsvWriter>(path.string(), report.columns);
    }
    return sink;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dataset resolution from config
// ---------------------------------------------------------------------------

/// Regression dataset: {"type":"synthetic","n":...,"d":...,"sigma_eta":...,
/// "theta_star":[...]} or {"type":"csv","path":...}. theta_star defaults to
/// seeded standard-normal coefficients.
inline Dataset resolve_regression_dataset(const nlohmann::json& cfg, std::uint64_t seed,
                                          std::size_t default_n, std::size_t default_d,
                                          double default_sigma_eta, Vector* theta_star_out = nullptr,
                                          double* sigma_eta_out = nullptr) {
    ConfigReader r(cfg, "dataset");
    const std::string type = r.text("type", "synthetic");
    const double split_ratio = r.number("split_ratio", 0.8);
    if (type == "csv") {
        const std::string path = r.text("path", "");
        r.finish();
        if (path.empty()) throw ConfigError("dataset.path required for csv datasets");
        if (sigma_eta_out) *sigma_eta_out = -1.0;  // unknown; estimate from residuals
        return load_dataset_csv(path, DatasetKind::regression, split_ratio, seed);
    }
    if (type != "synthetic") throw ConfigError("dataset.type must be 'synthetic' or 'csv'");
    const std::size_t n = r.count("n", default_n);
    const std::size_t d = r.count("d", default_d);
    const double sigma_eta = r.number("sigma_eta", default_sigma_eta);
    Vector theta_star = r.grid("theta_star", {});
    r.finish();
    if (theta_star.empty()) {
        RngStream trng(seed, mix_streams(stream_domain::kDataset, 0x7477));
        theta_star.resize(d);
        for (double& v : theta_star) v = trng.normal(0.0, 1.0);
    }
    if (theta_star.size() != d) throw ConfigError("dataset.theta_star must have d entries");
    if (theta_star_out) *theta_star_out = theta_star;
    if (sigma_eta_out) *sigma_eta_out = sigma_eta;
    return synth_regression(n, d, theta_star, sigma_eta, seed, split_ratio);
}

inline Dataset resolve_classification_dataset(const nlohmann::json& cfg, std::uint64_t seed,
                                              std::size_t default_n, std::size_t default_d,
                                              std::size_t default_classes,
                                              double default_separation) {
    ConfigReader r(cfg, "dataset");
    const std::string type = r.text("type", "synthetic");
    const double split_ratio = r.number("split_ratio", 0.8);
    if (type == "csv") {
        const std::string path = r.text("path", "");
        r.finish();
        if (path.empty()) throw ConfigError("dataset.path required for csv datasets");
        return load_dataset_csv(path, DatasetKind::classification, split_ratio, seed);
    }
    if (type != "synthetic") throw ConfigError("dataset.type must be 'synthetic' or 'csv'");
    const std::size_t n = r.count("n", default_n);
    const std::size_t d = r.count("d", default_d);
    const std::size_t classes = r.count("classes", default_classes);
    const double separation = r.number("separation", default_separation);
    r.finish();
    return synth_classification(n, d, classes, separation, seed, split_ratio);
}

// ---------------------------------------------------------------------------
// teacher-noise-sweep: inter-student variance and eval MSE vs alpha
// ---------------------------------------------------------------------------

inline Report run_teacher_noise_sweep(const nlohmann::json& cfg, const RunOptions& opts) {
    ConfigReader r(cfg, "teacher-noise-sweep");
    const auto alpha_grid = r.grid("alpha_grid", detail::linspace_grid(0.0, 2.0, 0.25));
    const std::size_t students = r.count("students", opts.paper_scale ? 1000 : 200);
    const std::string model = r.text("model", "linear");
    const double tolerance = r.number("oracle_tolerance", opts.paper_scale ? 0.15 : 0.35);
    const nlohmann::json mlp_cfg_json = r.object("mlp");
    const nlohmann::json ds_cfg = r.object("dataset");
    r.finish();

    MlpTrainerConfig mlp_cfg;
    {
        ConfigReader m(mlp_cfg_json, "teacher-noise-sweep.mlp");
        mlp_cfg.hidden = m.counts("hidden", {16});
        mlp_cfg.epochs = m.count("epochs", 500);
        mlp_cfg.lr = m.number("lr", 0.01);
        m.finish();
    }
    if (model != "linear" && model != "mlp")
        throw ConfigError("teacher-noise-sweep.model must be 'linear' or 'mlp'");

    const Dataset ds = resolve_regression_dataset(ds_cfg, opts.seed, 100, 5, 0.3);
    const RegressionTask task = ds.regression_task();
    const Vector y_train = ds.train_y();
    const Vector y_test = ds.test_y();
    const double var_y = sample_variance(y_train);

    Report report;
    report.experiment = "teacher-noise-sweep";
    report.seed = opts.seed;
    report.config_echo = cfg;
    report.config_echo["resolved"] = {{"students", students},
                                      {"model", model},
                                      {"var_y_train", var_y},
                                      {"noise_mode", "alpha_fraction_of_var"}};
    if (model == "linear") {
        report.columns = {"alpha",           "sigma_t2",          "v_inter",
                          "v_inter_oracle",  "v_inter_rel_err",   "mean_mse_teacher",
                          "mse_teacher_oracle", "mse_teacher_rel_err", "mean_mse_test"};
    } else {
        report.columns = {"alpha", "sigma_t2", "v_inter", "mean_mse_teacher", "mean_mse_test"};
    }
    report.svg_x = "alpha";
    report.svg_y = model == "linear" ? std::vector<std::string>{"v_inter", "v_inter_oracle"}
                                     : std::vector<std::string>{"v_inter"};
    auto sink = detail::make_sink(report, opts);

    const auto t0 = std::chrono::steady_clock::now();

    // teacher: fit on the train split of the (ground-truth) dataset
    RegressionModel teacher;
    if (model == "linear") {
        teacher = LinearModel{solve_least_squares(task.x_train, y_train)};
    } else {
        std::vector<std::size_t> sizes{task.x_train.cols};
        sizes.insert(sizes.end(), mlp_cfg.hidden.begin(), mlp_cfg.hidden.end());
        sizes.push_back(1);
        RngStream init_rng(opts.seed, mix_streams(stream_domain::kStudentInit, 0x7e));
        teacher = train_mlp(init_mlp(sizes, init_rng), task.x_train, y_train, mlp_cfg.epochs,
                            mlp_cfg.lr);
    }
    const Vector teacher_test = predict(teacher, task.x_test);
    if (!opts.out_dir.empty()) {
        const auto path =
            std::filesystem::path(opts.out_dir) / "teacher-noise-sweep.teacher.json";
        std::visit([&](const auto& m) { save_model(AnyModel{m}, path.string()); }, teacher);
    }

    const StudentTrainer trainer = model == "linear" ? StudentTrainer{LinearTrainer{}}
                                                     : StudentTrainer{mlp_cfg};

    Vector xs, vs;
    for (std::size_t a = 0; a < alpha_grid.size(); ++a) {
        const double alpha = alpha_grid[a];
        if (alpha < 0.0) throw ConfigError("teacher-noise-sweep: alpha must be >= 0");
        const NoiseSpec noise = NoiseSpec::fraction_of_var(alpha);
        const double sigma_t2 = alpha * var_y;
        const StrategyConfig strategy{DistillMethod::single_response, 1, students};
        const std::uint64_t sub_seed = mix_streams(opts.seed, a);
        const StudentEnsemble ens =
            distill_ensemble(teacher, task, noise, strategy, trainer, sub_seed, opts.threads);
        const double v_inter =
            students >= 2 ? inter_student_variance(ens.predictions) : 0.0;
        const double mse_teacher = detail::mean_student_mse(ens.predictions, teacher_test);
        const double mse_test = detail::mean_student_mse(ens.predictions, y_test);
        xs.push_back(sigma_t2);
        vs.push_back(v_inter);

        if (model == "linear") {
            const double oracle =
                oracles::expected_mse_vs_teacher(sigma_t2, task.x_train, task.x_test);
            const double v_rel = detail::relative_error(v_inter, oracle);
            const double m_rel = detail::relative_error(mse_teacher, oracle);
            sink.push({Cell::of(alpha), Cell::of(sigma_t2), Cell::of(v_inter), Cell::of(oracle),
                       Cell::of(v_rel), Cell::of(mse_teacher), Cell::of(oracle), Cell::of(m_rel),
                       Cell::of(mse_test)});
            detail::enforce_tolerance("teacher-noise-sweep", "alpha=" + format_number(alpha),
                                      "v_inter", v_inter, oracle, tolerance);
            detail::enforce_tolerance("teacher-noise-sweep", "alpha=" + format_number(alpha),
                                      "mean_mse_teacher", mse_teacher, oracle, tolerance);
        } else {
            sink.push({Cell::of(alpha), Cell::of(sigma_t2), Cell::of(v_inter),
                       Cell::of(mse_teacher), Cell::of(mse_test)});
        }
    }

    const detail::LineFit fit = detail::fit_line(xs, vs);
    report.summary = {{"v_inter_fit",
                       {{"slope", fit.slope}, {"intercept", fit.intercept},
                        {"r_squared", fit.r_squared}}}};
    if (model == "mlp") {
        // log-log exponent over the positive-noise points
        Vector lx, ly;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] > 0.0 && vs[i] > 0.0) {
                lx.push_back(std::log(xs[i]));
                ly.push_back(std::log(vs[i]));
            }
        }
        if (lx.size() >= 2) {
            const detail::LineFit logfit = detail::fit_line(lx, ly);
            report.summary["v_inter_exponent"] = logfit.slope;
            if (logfit.slope <= 0.0)
                throw NumericalFailure("teacher-noise-sweep: v_inter not increasing with noise");
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] > 0.0 && vs[i] <= 0.0)
                throw NumericalFailure("teacher-noise-sweep: nonpositive v_inter at alpha > 0");
        }
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// init-noise-sweep: multiplicative init perturbations of MLP students
// ---------------------------------------------------------------------------

inline Report run_init_noise_sweep(const nlohmann::json& cfg, const RunOptions& opts) {
    ConfigReader r(cfg, "init-noise-sweep");
    const auto sigma_grid = r.grid("sigma_init_grid", detail::linspace_grid(0.0, 0.4, 0.05));
    const std::size_t students = r.count("students", opts.paper_scale ? 100 : 20);
    const std::size_t epochs = r.count("epochs", 400);
    const double lr = r.number("lr", 0.01);
    const auto hidden = r.counts("hidden", {16});
    const std::size_t teacher_epochs = r.count("teacher_epochs", 800);
    const nlohmann::json ds_cfg = r.object("dataset");
    r.finish();

    const Dataset ds = resolve_regression_dataset(ds_cfg, opts.seed, 100, 5, 0.3);
    const RegressionTask task = ds.regression_task();
    const Vector y_train = ds.train_y();
    const Vector y_test = ds.test_y();

    Report report;
    report.experiment = "init-noise-sweep";
    report.seed = opts.seed;
    report.config_echo = cfg;
    report.columns = {"sigma_init", "mean_mse_test", "v_inter"};
    report.svg_x = "sigma_init";
    report.svg_y = {"mean_mse_test", "v_inter"};
    auto sink = detail::make_sink(report, opts);
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::size_t> sizes{task.x_train.cols};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);

    // deterministic teacher (alpha = 0): trained on ground truth, then its
    // outputs become the fixed distillation targets
    RngStream teacher_rng(opts.seed, mix_streams(stream_domain::kStudentInit, 0xaa));
    const MlpModel teacher =
        train_mlp(init_mlp(sizes, teacher_rng), task.x_train, y_train, teacher_epochs, lr);
    const Vector targets = predict(teacher, task.x_train);

    // one Kaiming base init shared by the whole sweep
    RngStream base_rng(opts.seed, mix_streams(stream_domain::kStudentInit, 0xbb));
    const MlpModel base_init = init_mlp(sizes, base_rng);

    for (std::size_t s = 0; s < sigma_grid.size(); ++s) {
        const double sigma_init = sigma_grid[s];
        if (sigma_init < 0.0) throw ConfigError("init-noise-sweep: sigma_init must be >= 0");
        Matrix predictions(students, task.x_test.rows, 0.0);
        parallel_for(students, opts.threads, [&](std::size_t j) {
            RngStream perturb_rng(mix_streams(opts.seed, s),
                                  mix_streams(stream_domain::kStudentInit, j));
            const MlpModel init = perturb_parameters(base_init, sigma_init, perturb_rng);
            const MlpModel trained = train_mlp(init, task.x_train, targets, epochs, lr);
            const Vector pred = predict(trained, task.x_test);
            for (std::size_t i = 0; i < pred.size(); ++i) predictions(j, i) = pred[i];
        });
        const double mse = detail::mean_student_mse(predictions, y_test);
        const double v_inter = students >= 2 ? inter_student_variance(predictions) : 0.0;
        sink.push({Cell::of(sigma_init), Cell::of(mse), Cell::of(v_inter)});
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// bootstrap-sweep: teacher-model and ground-truth bootstrap over m = beta n
// ---------------------------------------------------------------------------

inline Report run_bootstrap_sweep(const nlohmann::json& cfg, const RunOptions& opts) {
    ConfigReader r(cfg, "bootstrap-sweep");
    const auto beta_grid = r.grid("beta_grid", detail::linspace_grid(0.1, 1.0, 0.1));
    const std::size_t replicates = r.count("replicates", opts.paper_scale ? 1000 : 200);
    const std::string variant = r.text("variant", "both");
    const std::string trainer_kind = r.text("trainer", "linear");
    // the realized test-noise level only concentrates with a large test split,
    // so the default bands leave room for it on top of the replicate noise
    const double var_tolerance = r.number("var_tolerance", 0.25);
    const double mse_tolerance = r.number("mse_tolerance", 0.15);
    const bool enforce = r.flag("enforce_tolerances", true);
    double sigma2_override = r.number("sigma2", -1.0);
    const nlohmann::json mlp_cfg_json = r.object("mlp");
    const nlohmann::json ds_cfg = r.object("dataset");
    r.finish();
    if (variant != "both" && variant != "teacher_model" && variant != "ground_truth")
        throw ConfigError("bootstrap-sweep.variant must be both|teacher_model|ground_truth");
    if (trainer_kind != "linear" && trainer_kind != "mlp")
        throw ConfigError("bootstrap-sweep.trainer must be linear|mlp");

    double sigma_eta = -1.0;
    const Dataset ds = resolve_regression_dataset(ds_cfg, opts.seed, 2000, 8, 1.0, nullptr,
                                                  &sigma_eta);
    const Matrix x_train = ds.train_x();
    const Matrix x_test = ds.test_x();
    const Vector y_train = ds.train_y();
    const Vector y_test = ds.test_y();
    const std::size_t n = x_train.rows;
    const std::size_t d = x_train.cols;

    // noise level for the oracles: explicit config, else the synthetic
    // generator's sigma_eta^2, else the OLS residual estimate
    double sigma2 = sigma2_override;
    if (sigma2 < 0.0 && sigma_eta >= 0.0) sigma2 = sigma_eta * sigma_eta;
    if (sigma2 < 0.0) {
        const Vector theta = solve_least_squares(x_train, y_train);
        const Vector fitted = matvec(x_train, theta);
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            rss += (y_train[i] - fitted[i]) * (y_train[i] - fitted[i]);
        sigma2 = rss / static_cast<double>(n - d);
    }

    // Sigma_hat = (1/n) X^T X of the full training design
    Matrix sigma_x = gram(x_train);
    for (double& v : sigma_x.data) v /= static_cast<double>(n);
    const Matrix sigma_x_chol = cholesky(sigma_x);

    StudentTrainer trainer = LinearTrainer{};
    if (trainer_kind == "mlp") {
        MlpTrainerConfig mc;
        ConfigReader m(mlp_cfg_json, "bootstrap-sweep.mlp");
        mc.hidden = m.counts("hidden", {16});
        mc.epochs = m.count("epochs", 300);
        mc.lr = m.number("lr", 0.01);
        m.finish();
        std::vector<std::size_t> sizes{d};
        sizes.insert(sizes.end(), mc.hidden.begin(), mc.hidden.end());
        sizes.push_back(1);
        RngStream init_rng(opts.seed, mix_streams(stream_domain::kStudentInit, 0xcc));
        mc.fixed_init = init_mlp(sizes, init_rng);
        trainer = std::move(mc);
    }

    Report report;
    report.experiment = "bootstrap-sweep";
    report.seed = opts.seed;
    report.config_echo = cfg;
    report.config_echo["resolved"] = {{"sigma2", sigma2}, {"n_train", n}, {"d", d},
                                      {"replicates", replicates}};
    {
        // realized test-noise floor: the full-data fit's test MSE
        const Vector theta_full = solve_least_squares(x_train, y_train);
        report.summary["full_fit_test_mse"] = eval_mse(matvec(x_test, theta_full), y_test);
    }
    report.columns = {"variant",        "beta",           "m",
                      "mean_pred_var",  "oracle_pred_var", "pred_var_rel_err",
                      "mean_test_mse",  "oracle_test_mse", "test_mse_rel_err",
                      "var_test_mse"};
    report.svg_x = "m";
    report.svg_y = {"mean_pred_var", "oracle_pred_var"};
    report.svg_group = "variant";
    auto sink = detail::make_sink(report, opts);
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<BootstrapVariant> variants;
    if (variant == "both" || variant == "teacher_model")
        variants.push_back(BootstrapVariant::teacher_model);
    if (variant == "both" || variant == "ground_truth")
        variants.push_back(BootstrapVariant::ground_truth);

    const double mean_quad = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < x_test.rows; ++i)
            s += quad_form_inv(sigma_x_chol, x_test.row(i));
        return s / static_cast<double>(x_test.rows);
    }();

    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        const BootstrapVariant bv = variants[vi];
        const char* vname = bv == BootstrapVariant::teacher_model ? "teacher_model"
                                                                  : "ground_truth";
        for (std::size_t bi = 0; bi < beta_grid.size(); ++bi) {
            const double beta = beta_grid[bi];
            if (beta <= 0.0 || beta > 1.0)
                throw ConfigError("bootstrap-sweep: beta must be in (0, 1]");
            const std::size_t m = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::lround(beta * static_cast<double>(n))));
            BootstrapConfig bc;
            bc.variant = bv;
            bc.m = std::min(m, n);
            bc.B = replicates;
            RngStream rng(opts.seed,
                          mix_streams(stream_domain::kBootstrap, vi * 1000 + bi));
            const StudentEnsemble ens =
                run_bootstrap(x_train, y_train, bc, trainer, x_test, rng, opts.threads);

            const Vector pv = predictive_variance(ens, x_test);
            const double mean_pv = mean(pv);
            Vector mses(replicates);
            for (std::size_t b = 0; b < replicates; ++b)
                mses[b] = eval_mse(ens.predictions.row(b), y_test);
            const double mean_mse = mean(mses);
            const double var_mse = sample_variance(mses);

            const std::string row_name =
                std::string(vname) + " beta=" + format_number(beta);
            if (bv == BootstrapVariant::ground_truth) {
                const double oracle_var = sigma2 / static_cast<double>(bc.m) * mean_quad;
                const double oracle_mse = oracles::bootstrap_mse(sigma2, d, bc.m);
                const double var_rel = detail::relative_error(mean_pv, oracle_var);
                const double mse_rel = detail::relative_error(mean_mse, oracle_mse);
                sink.push({Cell::of(vname), Cell::of(beta), Cell::of(double(bc.m)),
                           Cell::of(mean_pv), Cell::of(oracle_var), Cell::of(var_rel),
                           Cell::of(mean_mse), Cell::of(oracle_mse), Cell::of(mse_rel),
                           Cell::of(var_mse)});
                if (enforce && static_cast<double>(bc.m) >= 0.3 * static_cast<double>(n)) {
                    detail::enforce_tolerance("bootstrap-sweep", row_name, "mean_pred_var",
                                              mean_pv, oracle_var, var_tolerance);
                    detail::enforce_tolerance("bootstrap-sweep", row_name, "mean_test_mse",
                                              mean_mse, oracle_mse, mse_tolerance);
                }
            } else if (trainer_kind == "linear") {
                // realizable teacher: the oracle variance is exactly zero
                const double teacher_mse = [&] {
                    const Vector theta_t = solve_least_squares(x_train, y_train);
                    return eval_mse(matvec(x_test, theta_t), y_test);
                }();
                const double mse_rel = detail::relative_error(mean_mse, teacher_mse);
                sink.push({Cell::of(vname), Cell::of(beta), Cell::of(double(bc.m)),
                           Cell::of(mean_pv), Cell::of(0.0),
                           Cell::of(detail::relative_error(mean_pv, 0.0)), Cell::of(mean_mse),
                           Cell::of(teacher_mse), Cell::of(mse_rel), Cell::of(var_mse)});
                if (enforce && mean_pv >= 1e-15) {
                    throw NumericalFailure("bootstrap-sweep [" + row_name +
                                           "] teacher-model bootstrap variance " +
                                           format_number(mean_pv) + " not degenerate");
                }
            } else {
                sink.push({Cell::of(vname), Cell::of(beta), Cell::of(double(bc.m)),
                           Cell::of(mean_pv), Cell::of(std::string()), Cell::of(std::string()),
                           Cell::of(mean_mse), Cell::of(std::string()), Cell::of(std::string()),
                           Cell::of(var_mse)});
            }
        }
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// entropy-compare: teacher vs hard-pseudo-label student predictive entropy
// ---------------------------------------------------------------------------

inline Report run_entropy_compare(const nlohmann::json& cfg, const RunOptions& opts) {
    ConfigReader r(cfg, "entropy-compare");
    const std::string family = r.text("family", "both");
    const std::size_t logistic_epochs = r.count("logistic_epochs", 300);
    const double logistic_lr = r.number("logistic_lr", 0.05);
    const nlohmann::json mlp_cfg_json = r.object("mlp");
    const nlohmann::json ds_cfg = r.object("dataset");
    r.finish();
    if (family != "both" && family != "logistic" && family != "mlp")
        throw ConfigError("entropy-compare.family must be both|logistic|mlp");

    std::vector<std::size_t> teacher_hidden{128}, student_hidden{64};
    std::size_t mlp_epochs = 300;
    double mlp_lr = 0.01;
    {
        ConfigReader m(mlp_cfg_json, "entropy-compare.mlp");
        teacher_hidden = m.counts("teacher_hidden", teacher_hidden);
        student_hidden = m.counts("student_hidden", student_hidden);
        mlp_epochs = m.count("epochs", mlp_epochs);
        mlp_lr = m.number("lr", mlp_lr);
        m.finish();
    }

    const Dataset ds = resolve_classification_dataset(ds_cfg, opts.seed, 1000, 5, 3, 8.0);
    const Matrix x_train = ds.train_x();
    const Matrix x_test = ds.test_x();
    const auto labels_train = ds.train_labels();
    const auto labels_test = ds.test_labels();
    std::size_t classes = 0;
    for (std::size_t lab : ds.labels) classes = std::max(classes, lab + 1);

    Report report;
    report.experiment = "entropy-compare";
    report.seed = opts.seed;
    report.config_echo = cfg;
    report.columns = {"family",        "group",          "n_teacher",     "n_student",
                      "h_teacher_mean", "h_teacher_std",  "h_student_mean", "h_student_std",
                      "overlap",       "teacher_accuracy", "student_accuracy"};
    auto sink = detail::make_sink(report, opts);
    const auto t0 = std::chrono::steady_clock::now();

    auto accuracy = [](std::span<const std::size_t> predicted,
                       std::span<const std::size_t> truth) {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
        return static_cast<double>(hits) / static_cast<double>(truth.size());
    };

    auto emit_family = [&](const std::string& name, const std::vector<EntropyReport>& teacher_rep,
                           const std::vector<EntropyReport>& student_rep, double teacher_acc,
                           double student_acc) {
        for (std::size_t g = 0; g < 3; ++g) {
            const bool overlap = entropy_intervals_overlap(teacher_rep[g], student_rep[g]);
            sink.push({Cell::of(name), Cell::of(std::string(entropy_group_name(teacher_rep[g].group))),
                       Cell::of(double(teacher_rep[g].count)), Cell::of(double(student_rep[g].count)),
                       Cell::of(teacher_rep[g].mean_entropy), Cell::of(teacher_rep[g].std_entropy),
                       Cell::of(student_rep[g].mean_entropy), Cell::of(student_rep[g].std_entropy),
                       Cell::of(overlap ? 1.0 : 0.0), Cell::of(teacher_acc),
                       Cell::of(student_acc)});
        }
    };

    if (family == "both" || family == "logistic") {
        const LogisticModel teacher =
            train_logistic(x_train, labels_train, logistic_epochs, logistic_lr, classes);
        const auto pseudo = predict_labels(predict_proba(teacher, x_train));
        const LogisticModel student =
            train_logistic(x_train, pseudo, logistic_epochs, logistic_lr, classes);
        const double teacher_acc =
            accuracy(predict_labels(predict_proba(teacher, x_test)), labels_test);
        const double student_acc =
            accuracy(predict_labels(predict_proba(student, x_test)), labels_test);
        emit_family("logistic", entropy_report(teacher, x_test, labels_test),
                    entropy_report(student, x_test, labels_test), teacher_acc, student_acc);
    }
    if (family == "both" || family == "mlp") {
        auto arch = [&](const std::vector<std::size_t>& hidden) {
            std::vector<std::size_t> sizes{x_train.cols};
            sizes.insert(sizes.end(), hidden.begin(), hidden.end());
            sizes.push_back(classes);
            return sizes;
        };
        RngStream trng(opts.seed, mix_streams(stream_domain::kStudentInit, 0x01));
        RngStream srng(opts.seed, mix_streams(stream_domain::kStudentInit, 0x02));
        const MlpModel teacher = train_mlp_classifier(init_mlp(arch(teacher_hidden), trng),
                                                      x_train, labels_train, mlp_epochs, mlp_lr);
        std::vector<std::size_t> pseudo(x_train.rows);
        {
            const Matrix logits = mlp_forward(teacher, x_train);
            for (std::size_t i = 0; i < logits.rows; ++i) pseudo[i] = argmax(logits.row(i));
        }
        const MlpModel student = train_mlp_classifier(init_mlp(arch(student_hidden), srng),
                                                      x_train, pseudo, mlp_epochs, mlp_lr);
        auto mlp_acc = [&](const MlpModel& m) {
            const Matrix logits = mlp_forward(m, x_test);
            std::vector<std::size_t> pred(logits.rows);
            for (std::size_t i = 0; i < logits.rows; ++i) pred[i] = argmax(logits.row(i));
            return accuracy(pred, labels_test);
        };
        emit_family("mlp", entropy_report(teacher, x_test, labels_test),
                    entropy_report(student, x_test, labels_test), mlp_acc(teacher),
                    mlp_acc(student));
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// variance-aware-sweep: averaging and variance-weighting vs k
// ---------------------------------------------------------------------------

inline Report run_variance_aware_sweep(const nlohmann::json& cfg, const RunOptions& opts) {
    ConfigReader r(cfg, "variance-aware-sweep");
    const auto k_grid = r.counts("k_grid", {1, 2, 4, 8});
    const std::size_t students = r.count("students", opts.paper_scale ? 1000 : 200);
    const double alpha = r.number("alpha", 1.0);
    const auto methods = r.texts(
        "methods", {"single_response", "multi_response", "averaging", "variance_weighted"});
    const double tolerance = r.number("oracle_tolerance", opts.paper_scale ? 0.2 : 0.4);
    const nlohmann::json ds_cfg = r.object("dataset");
    r.finish();

    const Dataset ds = resolve_regression_dataset(ds_cfg, opts.seed, 100, 5, 0.3);
    const RegressionTask task = ds.regression_task();
    const Vector y_train = ds.train_y();
    const Vector y_test = ds.test_y();
    const double var_y = sample_variance(y_train);
    const double sigma_t2 = alpha * var_y;

    const RegressionModel teacher = LinearModel{solve_least_squares(task.x_train, y_train)};
    const Vector teacher_test = predict(teacher, task.x_test);
    const NoiseSpec noise = NoiseSpec::fraction_of_var(alpha);

    Report report;
    report.experiment = "variance-aware-sweep";
    report.seed = opts.seed;
    report.config_echo = cfg;
    report.config_echo["resolved"] = {{"sigma_t2", sigma_t2}, {"students", students}};
    report.columns = {"method",          "k",       "v_inter", "v_inter_oracle",
                      "v_inter_rel_err", "mean_mse_teacher", "mean_mse_test"};
    report.svg_x = "k";
    report.svg_y = {"v_inter"};
    report.svg_group = "method";
    report.notes.push_back(
        "variance_weighted rows have no oracle column: weights are re-estimated per student, "
        "so no closed form predicts the realized inter-student variance");
    auto sink = detail::make_sink(report, opts);
    const auto t0 = std::chrono::steady_clock::now();

    auto parse_method = [](const std::string& name) {
        if (name == "single_response") return DistillMethod::single_response;
        if (name == "multi_response") return DistillMethod::multi_response;
        if (name == "averaging") return DistillMethod::averaging;
        if (name == "variance_weighted") return DistillMethod::variance_weighted;
        throw ConfigError("variance-aware-sweep: unknown method " + name);
    };

    std::size_t sweep_index = 0;
    for (const std::string& method_name : methods) {
        const DistillMethod method = parse_method(method_name);
        for (std::size_t k : k_grid) {
            // single_response is the k-independent reference; run it once
            if (method == DistillMethod::single_response && k != k_grid.front()) continue;
            if (method == DistillMethod::variance_weighted && k < 2) continue;
            const std::size_t effective_k = method == DistillMethod::single_response ? 1 : k;
            const StrategyConfig strategy{method, effective_k, students};
            const std::uint64_t sub_seed = mix_streams(opts.seed, 0x5000 + sweep_index);
            ++sweep_index;
            const StudentEnsemble ens = distill_ensemble(teacher, task, noise, strategy,
                                                         LinearTrainer{}, sub_seed, opts.threads);
            const double v_inter = inter_student_variance(ens.predictions);
            const double mse_teacher = detail::mean_student_mse(ens.predictions, teacher_test);
            const double mse_test = detail::mean_student_mse(ens.predictions, y_test);

            if (method == DistillMethod::variance_weighted) {
                // no closed form predicts the realized spread here: each
                // student re-estimates sigma_hat_T^2 from its own k draws, so
                // the weights themselves are random. The weight formulas get
                // their own direct checks instead.
                sink.push({Cell::of(method_name), Cell::of(double(effective_k)),
                           Cell::of(v_inter), Cell::of(std::string()), Cell::of(std::string()),
                           Cell::of(mse_teacher), Cell::of(mse_test)});
                continue;
            }
            Vector target_var(task.x_train.rows, sigma_t2 / static_cast<double>(effective_k));
            const double oracle = detail::predicted_v_inter_from_target_variance(
                task.x_train, task.x_test, target_var);
            const double rel = detail::relative_error(v_inter, oracle);
            sink.push({Cell::of(method_name), Cell::of(double(effective_k)), Cell::of(v_inter),
                       Cell::of(oracle), Cell::of(rel), Cell::of(mse_teacher),
                       Cell::of(mse_test)});
            detail::enforce_tolerance("variance-aware-sweep",
                                      method_name + " k=" + std::to_string(effective_k),
                                      "v_inter", v_inter, oracle, tolerance);
        }
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// sequence-suppression: entropy inequality on exhaustively enumerable toys
// ---------------------------------------------------------------------------

inline Report run_sequence_suppression(const nlohmann::json& cfg, const RunOptions& opts) {
    ConfigReader r(cfg, "sequence-suppression");
    const std::size_t vocab = r.count("vocab", 5);
    const std::size_t order = r.count("context_order", 1);
    const std::size_t max_length = r.count("max_length", 4);
    const std::size_t prompts = r.count("prompts", opts.paper_scale ? 500 : 500);
    const std::size_t students = r.count("students_per_prompt", 20);
    const auto tau_grid = r.grid("tau_grid", {0.5, 0.8, 1.0, 1.2, 1.5, 2.0});
    const std::size_t epochs = r.count("epochs", 300);
    const double lr = r.number("lr", 0.3);
    const double logit_scale = r.number("teacher_logit_scale", 1.0);
    r.finish();

    Report report;
    report.experiment = "sequence-suppression";
    report.seed = opts.seed;
    report.config_echo = cfg;
    report.columns = {"tau",           "prompts",           "assumption_frac",
                      "jensen_frac_on_subset", "mean_h_teacher", "mean_h_mean_student",
                      "mean_e_h_student"};
    report.svg_x = "tau";
    report.svg_y = {"assumption_frac"};
    auto sink = detail::make_sink(report, opts);
    const auto t0 = std::chrono::steady_clock::now();

    const auto outcomes = enumerate_outcomes(vocab, max_length);
    const CategoricalSequenceModel shape =
        CategoricalSequenceModel::zeros(vocab, order, max_length);

    // prompts and per-prompt teachers are shared across the tau grid
    RngStream prompt_rng(opts.seed, mix_streams(stream_domain::kDataset, 0x5e));
    const auto prompt_list = random_prompts(prompts, vocab, 0, std::min<std::size_t>(2, max_length),
                                            prompt_rng);
    std::vector<CategoricalSequenceModel> teachers;
    teachers.reserve(prompts);
    for (std::size_t p = 0; p < prompts; ++p) {
        RngStream trng(opts.seed, mix_streams(stream_domain::kTeacherDraw, p));
        teachers.push_back(
            CategoricalSequenceModel::random(vocab, order, max_length, trng, logit_scale));
    }

    for (std::size_t ti = 0; ti < tau_grid.size(); ++ti) {
        const double tau = tau_grid[ti];
        if (tau <= 0.0) throw ConfigError("sequence-suppression: tau must be > 0");
        std::size_t assumption_hits = 0;
        std::size_t jensen_hits = 0;
        double sum_ht = 0.0, sum_h_mean = 0.0, sum_e_h = 0.0;

        std::vector<std::array<double, 3>> per_prompt(prompts);
        parallel_for(prompts, opts.threads, [&](std::size_t p) {
            const auto& teacher = teachers[p];
            const auto& prompt = prompt_list[p];
            const double h_teacher =
                predictive_entropy(outcome_probabilities(teacher, prompt, outcomes, tau));
            Vector mean_ps(outcomes.size(), 0.0);
            double e_h = 0.0;
            for (std::size_t j = 0; j < students; ++j) {
                RngStream srng(mix_streams(opts.seed, ti),
                               mix_streams(mix_streams(stream_domain::kSequenceSample, p), j));
                const auto sample = sample_sequences(teacher, prompt, tau, 1, srng);
                const CategoricalSequenceModel student = train_sequence_student(
                    shape, {prompt}, {{sample.front()}}, epochs, lr);
                const Vector ps = outcome_probabilities(student, prompt, outcomes, 1.0);
                for (std::size_t o = 0; o < outcomes.size(); ++o) mean_ps[o] += ps[o];
                e_h += predictive_entropy(ps);
            }
            for (double& v : mean_ps) v /= static_cast<double>(students);
            e_h /= static_cast<double>(students);
            per_prompt[p] = {h_teacher, predictive_entropy(mean_ps), e_h};
        });

        for (std::size_t p = 0; p < prompts; ++p) {
            const auto [h_teacher, h_mean, e_h] = per_prompt[p];
            sum_ht += h_teacher;
            sum_h_mean += h_mean;
            sum_e_h += e_h;
            if (h_mean <= h_teacher + 1e-12) {
                ++assumption_hits;
                if (e_h <= h_teacher + 1e-12) ++jensen_hits;
            }
        }
        const double assumption_frac =
            static_cast<double>(assumption_hits) / static_cast<double>(prompts);
        const double jensen_frac =
            assumption_hits == 0
                ? 1.0
                : static_cast<double>(jensen_hits) / static_cast<double>(assumption_hits);
        sink.push({Cell::of(tau), Cell::of(double(prompts)), Cell::of(assumption_frac),
                   Cell::of(jensen_frac), Cell::of(sum_ht / double(prompts)),
                   Cell::of(sum_h_mean / double(prompts)), Cell::of(sum_e_h / double(prompts))});
        if (jensen_frac < 1.0) {
            throw NumericalFailure("sequence-suppression [tau=" + format_number(tau) +
                                   "]: entropy inequality violated on the assumption subset");
        }
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// sequence-noise: systematic-noise decomposition of distilled toy students
// ---------------------------------------------------------------------------

inline Report run_sequence_noise(const nlohmann::json& cfg, const RunOptions& opts) {
    ConfigReader r(cfg, "sequence-noise");
    const std::size_t vocab = r.count("vocab", 8);
    const std::size_t order = r.count("context_order", 2);
    const std::size_t max_length = r.count("max_length", 5);
    const std::size_t prompts = r.count("prompts", 64);
    const std::size_t students = r.count("students", 16);
    const auto k_list = r.counts("k_list", {5});
    const auto methods = r.texts(
        "methods", {"single_response", "multi_response", "averaging", "variance_weighted"});
    const double tau_teacher = r.number("tau_teacher", 1.2);
    const double tau_data = r.number("tau_data", 0.7);
    const double tau_eval = r.number("tau_eval", 0.4);
    const std::size_t eval_responses = r.count("eval_responses", 10);
    const std::size_t epochs = r.count("epochs", 25);
    const double lr = r.number("lr", 0.1);
    const double scale = r.number("ground_truth_scale", 5.0);
    const std::string init_kind = r.text("student_init", "pretrained");
    const double init_temperature = r.number("student_init_temperature", 1.3);
    const std::string noise_mode = r.text("noise_mode", "ensemble_sampled");
    r.finish();
    if (init_kind != "pretrained" && init_kind != "uniform")
        throw ConfigError("sequence-noise.student_init must be pretrained|uniform");
    if (init_temperature <= 0.0)
        throw ConfigError("sequence-noise.student_init_temperature must be > 0");
    if (noise_mode != "ensemble_greedy" && noise_mode != "ensemble_sampled" &&
        noise_mode != "per_student_sampled")
        throw ConfigError(
            "sequence-noise.noise_mode must be ensemble_greedy|ensemble_sampled|per_student_sampled");

    Report report;
    report.experiment = "sequence-noise";
    report.seed = opts.seed;
    report.config_echo = cfg;
    report.columns = {"method", "k", "slope", "r_squared", "avg_noise", "avg_systematic_noise"};
    report.svg_x = "k";
    report.svg_y = {"avg_systematic_noise"};
    report.svg_group = "method";
    auto sink = detail::make_sink(report, opts);
    const auto t0 = std::chrono::steady_clock::now();

    // ground-truth generator doubles as the (noisy) teacher
    RngStream grng(opts.seed, mix_streams(stream_domain::kTeacherDraw, 0xf0));
    const CategoricalSequenceModel teacher =
        CategoricalSequenceModel::random(vocab, order, max_length, grng, scale);
    RngStream prompt_rng(opts.seed, mix_streams(stream_domain::kDataset, 0xf1));
    const auto prompt_list =
        random_prompts(prompts, vocab, 1, std::min<std::size_t>(3, max_length), prompt_rng);
    // "pretrained" starts every student at a tempered (weaker, broader) copy
    // of the ground-truth model, mirroring fine-tuning of a generic pretrained
    // student where distillation is a weak local correction; "uniform" starts
    // from flat logits
    CategoricalSequenceModel init = CategoricalSequenceModel::zeros(vocab, order, max_length);
    if (init_kind == "pretrained") {
        init = teacher;
        for (double& v : init.logits.data) v /= init_temperature;
    }

    // teacher noise per prompt: sampling spread of its own responses
    Vector teacher_disp(prompts, 0.0);
    for (std::size_t p = 0; p < prompts; ++p) {
        RngStream erng(opts.seed, mix_streams(mix_streams(stream_domain::kEval, 0x01), p));
        teacher_disp[p] =
            dispersion(sample_sequences(teacher, prompt_list[p], tau_eval, eval_responses, erng),
                       vocab);
    }

    // Per-prompt ensemble noise. "ensemble_greedy" measures the spread of the
    // students' top-1 decodes (what the distillation process itself
    // scattered); "ensemble_sampled" pools one sampled response per student;
    // "per_student_sampled" averages each student's own sampling dispersion.
    auto ensemble_dispersions = [&](const std::vector<CategoricalSequenceModel>& models,
                                    std::uint64_t eval_tag) {
        Vector disp(prompts, 0.0);
        for (std::size_t p = 0; p < prompts; ++p) {
            if (noise_mode == "ensemble_greedy") {
                std::vector<TokenSeq> decodes;
                decodes.reserve(models.size());
                for (const auto& m : models) decodes.push_back(greedy_sequence(m, prompt_list[p]));
                disp[p] = dispersion(decodes, vocab);
            } else if (noise_mode == "ensemble_sampled") {
                std::vector<TokenSeq> responses;
                responses.reserve(models.size());
                for (std::size_t j = 0; j < models.size(); ++j) {
                    RngStream erng(opts.seed,
                                   mix_streams(mix_streams(stream_domain::kEval,
                                                           eval_tag * 131 + j),
                                               p));
                    responses.push_back(
                        sample_sequences(models[j], prompt_list[p], tau_eval, 1, erng).front());
                }
                disp[p] = dispersion(responses, vocab);
            } else {
                double total = 0.0;
                for (std::size_t j = 0; j < models.size(); ++j) {
                    RngStream erng(opts.seed,
                                   mix_streams(mix_streams(stream_domain::kEval,
                                                           eval_tag * 131 + j),
                                               p));
                    total += dispersion(
                        sample_sequences(models[j], prompt_list[p], tau_eval, eval_responses,
                                         erng),
                        vocab);
                }
                disp[p] = total / static_cast<double>(models.size());
            }
        }
        return disp;
    };

    SequenceTrainConfig train_cfg;
    train_cfg.epochs = epochs;
    train_cfg.lr = lr;

    // direct fine-tune baseline: an ensemble trained on fresh clean
    // (low-temperature) reference responses, no teacher noise
    const StrategyConfig baseline_strategy{DistillMethod::single_response, 1, students};
    const SequenceStudentEnsemble baseline_ens = distill_sequence_student_ensemble(
        teacher, prompt_list, baseline_strategy, init, tau_data, train_cfg,
        mix_streams(opts.seed, 0x6fff), opts.threads);
    const Vector baseline_disp = ensemble_dispersions(baseline_ens.students, 0x02);
    {
        const NoiseDecomposition d =
            noise_decomposition(teacher_disp, baseline_disp, baseline_disp);
        sink.push({Cell::of(std::string("direct_ft")), Cell::of(0.0), Cell::of(d.slope),
                   Cell::of(d.r_squared), Cell::of(d.avg_noise),
                   Cell::of(d.avg_systematic_noise)});
    }

    auto parse_method = [](const std::string& name) {
        if (name == "single_response") return DistillMethod::single_response;
        if (name == "multi_response") return DistillMethod::multi_response;
        if (name == "averaging") return DistillMethod::averaging;
        if (name == "variance_weighted") return DistillMethod::variance_weighted;
        throw ConfigError("sequence-noise: unknown method " + name);
    };

    std::size_t sweep_index = 0;
    for (const std::string& method_name : methods) {
        const DistillMethod method = parse_method(method_name);
        for (std::size_t k : k_list) {
            if (method == DistillMethod::single_response && k != k_list.front()) continue;
            if (method == DistillMethod::variance_weighted && k < 2) continue;
            const std::size_t effective_k = method == DistillMethod::single_response ? 1 : k;
            const StrategyConfig strategy{method, effective_k, students};
            const std::uint64_t sub_seed = mix_streams(opts.seed, 0x6000 + sweep_index);
            const SequenceStudentEnsemble ens = distill_sequence_student_ensemble(
                teacher, prompt_list, strategy, init, tau_teacher, train_cfg, sub_seed,
                opts.threads);
            const Vector student_disp =
                ensemble_dispersions(ens.students, 0x100 + sweep_index);

            const NoiseDecomposition d =
                noise_decomposition(teacher_disp, student_disp, baseline_disp);
            sink.push({Cell::of(method_name), Cell::of(double(effective_k)), Cell::of(d.slope),
                       Cell::of(d.r_squared), Cell::of(d.avg_noise),
                       Cell::of(d.avg_systematic_noise)});
            ++sweep_index;
        }
    }

    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "teacher-noise-sweep", "init-noise-sweep",    "bootstrap-sweep", "entropy-compare",
        "variance-aware-sweep", "sequence-suppression", "sequence-noise"};
    return names;
}

inline Report run_experiment(const std::string& name, const nlohmann::json& cfg,
                             const RunOptions& opts) {
    if (name == "teacher-noise-sweep") return run_teacher_noise_sweep(cfg, opts);
    if (name == "init-noise-sweep") return run_init_noise_sweep(cfg, opts);
    if (name == "bootstrap-sweep") return run_bootstrap_sweep(cfg, opts);
    if (name == "entropy-compare") return run_entropy_compare(cfg, opts);
    if (name == "variance-aware-sweep") return run_variance_aware_sweep(cfg, opts);
    if (name == "sequence-suppression") return run_sequence_suppression(cfg, opts);
    if (name == "sequence-noise") return run_sequence_noise(cfg, opts);
    throw ConfigError("unknown experiment: " + name);
}

}  // namespace distlab
