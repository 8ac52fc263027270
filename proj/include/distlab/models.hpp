#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "distlab/adam.hpp"
#include "distlab/errors.hpp"
#include "distlab/linalg.hpp"
#include "distlab/matrix.hpp"
#include "distlab/rng.hpp"

namespace distlab {

// ---------------------------------------------------------------------------
// Teacher output noise description. Exactly one of the two magnitudes is
// active: either sigma_t directly, or alpha as a fraction of Var(y).
// ---------------------------------------------------------------------------
struct NoiseSpec {
    enum class Mode { direct, fraction_of_var };

    Mode mode{Mode::direct};
    double sigma_t{0.0};
    double alpha{0.0};
    double temperature{1.0};

    static NoiseSpec direct(double sigma) {
        if (sigma < 0.0) throw NegativeStd("NoiseSpec: sigma_t < 0");
        NoiseSpec s;
        s.mode = Mode::direct;
        s.sigma_t = sigma;
        return s;
    }

    static NoiseSpec fraction_of_var(double alpha) {
        if (alpha < 0.0) throw NegativeStd("NoiseSpec: alpha < 0");
        NoiseSpec s;
        s.mode = Mode::fraction_of_var;
        s.alpha = alpha;
        return s;
    }

    /// Effective output std. `var_y` is required only in fraction mode.
    double resolved_sigma(double var_y = 0.0) const {
        if (mode == Mode::direct) return sigma_t;
        if (alpha == 0.0) return 0.0;
        if (var_y <= 0.0) throw InvalidShape("NoiseSpec: fraction mode needs Var(y) > 0");
        return std::sqrt(alpha * var_y);
    }
};

// ---------------------------------------------------------------------------
// Linear model
// ---------------------------------------------------------------------------
struct LinearModel {
    Vector theta;
};

inline Vector predict(const LinearModel& m, const Matrix& x) {
    if (x.cols != m.theta.size()) {
        throw DimensionMismatch("predict(linear): features " + std::to_string(x.cols) + " vs " +
                                std::to_string(m.theta.size()));
    }
    return matvec(x, m.theta);
}

// ---------------------------------------------------------------------------
// Feed-forward MLP. Weights are stored (fan_in x fan_out); the activation is
// applied to every layer except the last, which stays linear.
// ---------------------------------------------------------------------------
enum class Activation { relu, tanh };

struct MlpModel {
    std::vector<Matrix> layer_weights;
    std::vector<Vector> layer_biases;
    Activation activation{Activation::relu};

    std::size_t layer_count() const { return layer_weights.size(); }
    std::size_t input_dim() const { return layer_weights.front().rows; }
    std::size_t output_dim() const { return layer_weights.back().cols; }
};

inline double apply_activation(Activation act, double z) {
    return act == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double activation_derivative(Activation act, double activated) {
    // both relu and tanh derivatives are expressible from the activated value
    return act == Activation::relu ? (activated > 0.0 ? 1.0 : 0.0)
                                   : 1.0 - activated * activated;
}

/// Forward pass; returns (n x output_dim) activations of the last layer.
inline Matrix mlp_forward(const MlpModel& m, const Matrix& x) {
    if (x.cols != m.input_dim()) {
        throw DimensionMismatch("mlp_forward: features " + std::to_string(x.cols) + " vs " +
                                std::to_string(m.input_dim()));
    }
    Matrix h = x;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const Matrix& w = m.layer_weights[l];
        const Vector& b = m.layer_biases[l];
        Matrix z = matmul(h, w);
        for (std::size_t i = 0; i < z.rows; ++i)
            for (std::size_t j = 0; j < z.cols; ++j) z(i, j) += b[j];
        if (l + 1 < m.layer_count()) {
            for (double& v : z.data) v = apply_activation(m.activation, v);
        }
        h = std::move(z);
    }
    return h;
}

inline Vector predict(const MlpModel& m, const Matrix& x) {
    if (m.output_dim() != 1) throw DimensionMismatch("predict(mlp): scalar output expected");
    return mlp_forward(m, x).data;
}

/// Kaiming-normal initialization (variance 2/fan_in), zero biases.
inline MlpModel init_mlp(const std::vector<std::size_t>& layer_sizes, RngStream& rng,
                         Activation activation = Activation::relu) {
    if (layer_sizes.size() < 2) throw EmptyArchitecture("init_mlp: need >= 2 layer sizes");
    MlpModel m;
    m.activation = activation;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t fan_in = layer_sizes[l];
        const std::size_t fan_out = layer_sizes[l + 1];
        if (fan_in == 0 || fan_out == 0) throw EmptyArchitecture("init_mlp: zero-width layer");
        const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
        m.layer_weights.push_back(gaussian_matrix(rng, fan_in, fan_out, 0.0, std));
        m.layer_biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

/// Multiplicative Gaussian weight perturbation W <- W (1 + eps); biases are
/// untouched. sigma_init = 0 returns the model bit-exact (no RNG consumed).
inline MlpModel perturb_parameters(const MlpModel& model, double sigma_init, RngStream& rng) {
    if (sigma_init < 0.0) throw NegativeStd("perturb_parameters: sigma_init < 0");
    if (sigma_init == 0.0) return model;
    MlpModel out = model;
    for (Matrix& w : out.layer_weights) {
        for (double& v : w.data) v *= 1.0 + rng.normal(0.0, sigma_init);
    }
    return out;
}

// --- parameter flattening (shared by training and gradient checks) ---------

inline std::size_t mlp_param_count(const MlpModel& m) {
    std::size_t n = 0;
    for (std::size_t l = 0; l < m.layer_count(); ++l)
        n += m.layer_weights[l].data.size() + m.layer_biases[l].size();
    return n;
}

inline Vector mlp_flatten(const MlpModel& m) {
    Vector p;
    p.reserve(mlp_param_count(m));
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        p.insert(p.end(), m.layer_weights[l].data.begin(), m.layer_weights[l].data.end());
        p.insert(p.end(), m.layer_biases[l].begin(), m.layer_biases[l].end());
    }
    return p;
}

inline MlpModel mlp_unflatten(const MlpModel& shape, std::span<const double> params) {
    if (params.size() != mlp_param_count(shape)) throw DimensionMismatch("mlp_unflatten: size");
    MlpModel m = shape;
    std::size_t off = 0;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        for (double& v : m.layer_weights[l].data) v = params[off++];
        for (double& v : m.layer_biases[l]) v = params[off++];
    }
    return m;
}

namespace detail {

// Backprop through the linear output head given dL/d(output) and the cached
// per-layer activations. Writes the flattened gradient.
inline void mlp_backprop(const MlpModel& m, const std::vector<Matrix>& acts, Matrix delta,
                         Vector& grad) {
    grad.assign(mlp_param_count(m), 0.0);
    // offsets of each layer's slice in the flattened vector
    std::vector<std::size_t> offsets(m.layer_count());
    std::size_t off = 0;
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        offsets[l] = off;
        off += m.layer_weights[l].data.size() + m.layer_biases[l].size();
    }
    for (std::size_t l = m.layer_count(); l-- > 0;) {
        const Matrix& h_in = acts[l];
        const std::size_t fan_in = m.layer_weights[l].rows;
        const std::size_t fan_out = m.layer_weights[l].cols;
        double* gw = grad.data() + offsets[l];
        double* gb = gw + fan_in * fan_out;
        // dW = h_in^T delta, db = column sums of delta
        for (std::size_t i = 0; i < h_in.rows; ++i) {
            const double* hi = h_in.data.data() + i * fan_in;
            const double* di = delta.data.data() + i * fan_out;
            for (std::size_t a = 0; a < fan_in; ++a) {
                const double hv = hi[a];
                if (hv == 0.0) continue;
                double* gwa = gw + a * fan_out;
                for (std::size_t b = 0; b < fan_out; ++b) gwa[b] += hv * di[b];
            }
            for (std::size_t b = 0; b < fan_out; ++b) gb[b] += di[b];
        }
        if (l == 0) break;
        // push delta through W_l and the activation of layer l-1
        Matrix prev(delta.rows, fan_in, 0.0);
        const Matrix& w = m.layer_weights[l];
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double* di = delta.data.data() + i * fan_out;
            double* pi = prev.data.data() + i * fan_in;
            for (std::size_t a = 0; a < fan_in; ++a) {
                const double* wa = w.data.data() + a * fan_out;
                double s = 0.0;
                for (std::size_t b = 0; b < fan_out; ++b) s += wa[b] * di[b];
                pi[a] = s * activation_derivative(m.activation, h_in(i, a));
            }
        }
        delta = std::move(prev);
    }
}

// Activations per layer: acts[0] = input, acts[l] = output of layer l-1
// (post-activation), acts.back() = network output.
inline std::vector<Matrix> mlp_activations(const MlpModel& m, const Matrix& x) {
    std::vector<Matrix> acts;
    acts.reserve(m.layer_count() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        Matrix z = matmul(acts.back(), m.layer_weights[l]);
        for (std::size_t i = 0; i < z.rows; ++i)
            for (std::size_t j = 0; j < z.cols; ++j) z(i, j) += m.layer_biases[l][j];
        if (l + 1 < m.layer_count())
            for (double& v : z.data) v = apply_activation(m.activation, v);
        acts.push_back(std::move(z));
    }
    return acts;
}

}  // namespace detail

/// MSE loss (scalar-output MLP) and its flattened analytic gradient.
inline double mlp_mse_loss_grad(const MlpModel& m, const Matrix& x,
                                std::span<const double> targets, Vector& grad) {
    if (m.output_dim() != 1) throw DimensionMismatch("mlp_mse_loss_grad: scalar output expected");
    if (targets.size() != x.rows) throw DimensionMismatch("mlp_mse_loss_grad: target count");
    const auto acts = detail::mlp_activations(m, x);
    const Matrix& out = acts.back();
    const double n = static_cast<double>(x.rows);
    double loss = 0.0;
    Matrix delta(x.rows, 1, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double r = out(i, 0) - targets[i];
        loss += r * r;
        delta(i, 0) = 2.0 * r / n;
    }
    loss /= n;
    detail::mlp_backprop(m, acts, std::move(delta), grad);
    return loss;
}

/// Softmax cross-entropy loss (classifier MLP) and flattened gradient.
inline double mlp_ce_loss_grad(const MlpModel& m, const Matrix& x,
                               std::span<const std::size_t> labels, Vector& grad) {
    if (labels.size() != x.rows) throw DimensionMismatch("mlp_ce_loss_grad: label count");
    const auto acts = detail::mlp_activations(m, x);
    const Matrix& out = acts.back();
    const std::size_t classes = out.cols;
    const double n = static_cast<double>(x.rows);
    double loss = 0.0;
    Matrix delta(out.rows, out.cols, 0.0);
    for (std::size_t i = 0; i < out.rows; ++i) {
        if (labels[i] >= classes) throw InvalidShape("mlp_ce_loss_grad: label out of range");
        const Vector p = softmax(out.row(i));
        loss -= std::log(std::max(p[labels[i]], 1e-300));
        for (std::size_t c = 0; c < classes; ++c)
            delta(i, c) = (p[c] - (c == labels[i] ? 1.0 : 0.0)) / n;
    }
    loss /= n;
    detail::mlp_backprop(m, acts, std::move(delta), grad);
    return loss;
}

namespace detail {

template <typename LossGradFn>
MlpModel train_mlp_impl(const MlpModel& init, std::size_t epochs, double lr,
                        const LossGradFn& loss_grad, const char* what) {
    if (epochs < 1) throw InvalidShape(std::string(what) + ": epochs must be >= 1");
    Vector params = mlp_flatten(init);
    AdamState state(params.size());
    const AdamConfig cfg{lr, 0.9, 0.999, 1e-8};
    Vector grad;
    MlpModel current = init;
    double initial_loss = 0.0;
    double best_loss = 0.0;
    Vector best_params = params;
    for (std::size_t e = 0; e < epochs; ++e) {
        const double loss = loss_grad(current, grad);
        if (!std::isfinite(loss)) {
            throw NonFiniteLoss(std::string(what) + ": diverged at epoch " + std::to_string(e));
        }
        if (e == 0) {
            initial_loss = loss;
            best_loss = loss;
        } else if (loss < best_loss) {
            best_loss = loss;
            best_params = params;
        }
        state.step(params, grad, cfg);
        current = mlp_unflatten(init, params);
    }
    Vector final_grad;
    const double final_loss = loss_grad(current, final_grad);
    if (!std::isfinite(final_loss)) throw NonFiniteLoss(std::string(what) + ": diverged");
    // contract: never end worse than the starting point
    if (final_loss > initial_loss && best_loss <= initial_loss) {
        return mlp_unflatten(init, best_params);
    }
    return current;
}

}  // namespace detail

/// Full-batch Adam on the mean-squared distillation loss.
inline MlpModel train_mlp(const MlpModel& init, const Matrix& x, std::span<const double> targets,
                          std::size_t epochs, double lr) {
    if (!all_finite(x) || !all_finite(targets)) throw NonFiniteLoss("train_mlp: non-finite input");
    return detail::train_mlp_impl(
        init, epochs, lr,
        [&](const MlpModel& m, Vector& grad) { return mlp_mse_loss_grad(m, x, targets, grad); },
        "train_mlp");
}

/// Full-batch Adam on softmax cross-entropy (classifier head).
inline MlpModel train_mlp_classifier(const MlpModel& init, const Matrix& x,
                                     std::span<const std::size_t> labels, std::size_t epochs,
                                     double lr) {
    return detail::train_mlp_impl(
        init, epochs, lr,
        [&](const MlpModel& m, Vector& grad) { return mlp_ce_loss_grad(m, x, labels, grad); },
        "train_mlp_classifier");
}

// ---------------------------------------------------------------------------
// Multinomial logistic model
// ---------------------------------------------------------------------------
struct LogisticModel {
    Matrix weights;  // classes x features
    Vector biases;   // classes
};

inline Matrix predict_proba(const LogisticModel& m, const Matrix& x) {
    if (x.cols != m.weights.cols) {
        throw DimensionMismatch("predict_proba: features " + std::to_string(x.cols) + " vs " +
                                std::to_string(m.weights.cols));
    }
    const std::size_t classes = m.weights.rows;
    Matrix proba(x.rows, classes, 0.0);
    Vector logits(classes, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t c = 0; c < classes; ++c)
            logits[c] = dot(x.row(i), m.weights.row(c)) + m.biases[c];
        const Vector p = softmax(logits);
        for (std::size_t c = 0; c < classes; ++c) proba(i, c) = p[c];
    }
    return proba;
}

inline std::vector<std::size_t> predict_labels(const Matrix& proba) {
    std::vector<std::size_t> labels(proba.rows);
    for (std::size_t i = 0; i < proba.rows; ++i) labels[i] = argmax(proba.row(i));
    return labels;
}

inline double cross_entropy(const LogisticModel& m, const Matrix& x,
                            std::span<const std::size_t> labels) {
    const Matrix proba = predict_proba(m, x);
    double ce = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i)
        ce -= std::log(std::max(proba(i, labels[i]), 1e-300));
    return ce / static_cast<double>(x.rows);
}

/// Full-batch Adam on softmax cross-entropy from a zero initialization.
/// Class count is inferred as max(label) + 1 unless given explicitly.
inline LogisticModel train_logistic(const Matrix& x, std::span<const std::size_t> labels,
                                    std::size_t epochs, double lr, std::size_t classes = 0) {
    if (labels.size() != x.rows) throw DimensionMismatch("train_logistic: label count");
    if (x.rows == 0) throw EmptyDataset("train_logistic: no rows");
    if (classes == 0) {
        for (std::size_t lab : labels) classes = std::max(classes, lab + 1);
    }
    for (std::size_t lab : labels) {
        if (lab >= classes) throw InvalidShape("train_logistic: label out of range");
    }
    const std::size_t d = x.cols;
    const double n = static_cast<double>(x.rows);

    Vector params(classes * d + classes, 0.0);
    auto unpack = [&](const Vector& p) {
        LogisticModel m;
        m.weights = Matrix(classes, d, 0.0);
        std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(classes * d),
                  m.weights.data.begin());
        m.biases.assign(p.begin() + static_cast<std::ptrdiff_t>(classes * d), p.end());
        return m;
    };
    auto loss_grad = [&](const Vector& p, Vector& grad) {
        const LogisticModel m = unpack(p);
        const Matrix proba = predict_proba(m, x);
        grad.assign(p.size(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            loss -= std::log(std::max(proba(i, labels[i]), 1e-300));
            for (std::size_t c = 0; c < classes; ++c) {
                const double dz = (proba(i, c) - (c == labels[i] ? 1.0 : 0.0)) / n;
                double* gw = grad.data() + c * d;
                const double* xi = x.data.data() + i * d;
                for (std::size_t j = 0; j < d; ++j) gw[j] += dz * xi[j];
                grad[classes * d + c] += dz;
            }
        }
        return loss / n;
    };

    AdamState state(params.size());
    const AdamConfig cfg{lr, 0.9, 0.999, 1e-8};
    Vector grad;
    double initial_loss = 0.0;
    double best_loss = 0.0;
    Vector best_params = params;
    for (std::size_t e = 0; e < epochs; ++e) {
        const double loss = loss_grad(params, grad);
        if (!std::isfinite(loss))
            throw NonFiniteLoss("train_logistic: diverged at epoch " + std::to_string(e));
        if (e == 0) {
            initial_loss = loss;
            best_loss = loss;
        } else if (loss < best_loss) {
            best_loss = loss;
            best_params = params;
        }
        state.step(params, grad, cfg);
    }
    Vector tmp;
    if (loss_grad(params, tmp) > initial_loss) params = best_params;
    return unpack(params);
}

// ---------------------------------------------------------------------------
// Teacher responses: k independent noisy draws per input (column j holds the
// j-th draw). sigma_T = 0 gives k identical columns.
// ---------------------------------------------------------------------------
template <typename Model>
Matrix teacher_respond(const Model& model, const Matrix& x, const NoiseSpec& noise, std::size_t k,
                       RngStream& rng, double var_y = 0.0) {
    if (k < 1) throw InvalidShape("teacher_respond: k must be >= 1");
    const Vector mean = predict(model, x);
    const double sigma = noise.resolved_sigma(var_y);
    Matrix samples(x.rows, k, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            samples(i, j) = sigma == 0.0 ? mean[i] : mean[i] + rng.normal(0.0, sigma);
        }
    }
    return samples;
}

// ---------------------------------------------------------------------------
// Model variants used by ensembles and serialization.
// ---------------------------------------------------------------------------
using RegressionModel = std::variant<LinearModel, MlpModel>;

inline Vector predict(const RegressionModel& m, const Matrix& x) {
    return std::visit([&](const auto& model) { return predict(model, x); }, m);
}

}  // namespace distlab
