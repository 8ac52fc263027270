#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "distlab/adam.hpp"
#include "distlab/errors.hpp"
#include "distlab/linalg.hpp"
#include "distlab/matrix.hpp"
#include "distlab/rng.hpp"

namespace distlab {

using TokenSeq = std::vector<std::size_t>;

// ---------------------------------------------------------------------------
// Tabular autoregressive categorical sequence model.
//
// Tokens are 0..V-1 and token V-1 is the end-of-sequence token. The next-token
// distribution depends on the previous `context_order` symbols; positions
// before the start are padded with a context-only begin symbol (index V), so
// the logits table has (V+1)^context_order rows of V logits each.
//
// Generation draws tokens until EOS is emitted or max_length tokens have been
// produced. A sampled sequence includes its terminating EOS; a sequence of
// exactly max_length tokens with no trailing EOS was truncated. Under this
// convention the per-step log-softmax sum makes sequence probabilities sum to
// one over the full outcome space.
// ---------------------------------------------------------------------------
struct CategoricalSequenceModel {
    std::size_t vocab_size{0};
    std::size_t context_order{1};
    std::size_t max_length{0};
    Matrix logits;  // (V+1)^context_order rows, V cols

    std::size_t eos_token() const { return vocab_size - 1; }
    std::size_t begin_symbol() const { return vocab_size; }

    std::size_t context_count() const {
        std::size_t n = 1;
        for (std::size_t i = 0; i < context_order; ++i) n *= vocab_size + 1;
        return n;
    }

    static CategoricalSequenceModel zeros(std::size_t vocab, std::size_t order,
                                          std::size_t max_len) {
        if (vocab < 2) throw InvalidShape("sequence model: vocab must be >= 2");
        if (order < 1) throw InvalidShape("sequence model: context_order must be >= 1");
        if (max_len < 1) throw InvalidShape("sequence model: max_length must be >= 1");
        CategoricalSequenceModel m;
        m.vocab_size = vocab;
        m.context_order = order;
        m.max_length = max_len;
        m.logits = Matrix(m.context_count(), vocab, 0.0);
        return m;
    }

    /// Random tabular model with N(0, scale^2) logits.
    static CategoricalSequenceModel random(std::size_t vocab, std::size_t order,
                                           std::size_t max_len, RngStream& rng,
                                           double scale = 1.0) {
        CategoricalSequenceModel m = zeros(vocab, order, max_len);
        for (double& v : m.logits.data) v = rng.normal(0.0, scale);
        return m;
    }
};

/// Rolling context window over symbols in [0, V]; encodes to a table row.
class ContextWindow {
public:
    ContextWindow(const CategoricalSequenceModel& m) : base_(m.vocab_size + 1) {
        window_.assign(m.context_order, m.begin_symbol());
    }

    void push(std::size_t symbol) {
        for (std::size_t i = 0; i + 1 < window_.size(); ++i) window_[i] = window_[i + 1];
        window_.back() = symbol;
    }

    std::size_t encode() const {
        std::size_t idx = 0;
        for (std::size_t s : window_) idx = idx * base_ + s;
        return idx;
    }

private:
    std::size_t base_;
    std::vector<std::size_t> window_;
};

inline void validate_tokens(const CategoricalSequenceModel& m, std::span<const std::size_t> seq,
                            const char* what) {
    for (std::size_t t : seq) {
        if (t >= m.vocab_size) {
            throw InvalidToken(std::string(what) + ": token " + std::to_string(t) +
                               " >= vocab " + std::to_string(m.vocab_size));
        }
    }
}

inline Vector next_token_distribution(const CategoricalSequenceModel& m, std::size_t ctx_index,
                                      double temperature = 1.0) {
    if (temperature <= 0.0) throw InvalidShape("next_token_distribution: temperature <= 0");
    return softmax(m.logits.row(ctx_index), temperature);
}

namespace detail {

inline std::size_t draw_categorical(std::span<const double> p, RngStream& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cum += p[i];
        if (u < cum) return i;
    }
    return p.size() - 1;
}

}  // namespace detail

/// Autoregressive sampling at the given temperature.
inline std::vector<TokenSeq> sample_sequences(const CategoricalSequenceModel& m,
                                              std::span<const std::size_t> prompt,
                                              double temperature, std::size_t count,
                                              RngStream& rng) {
    if (temperature <= 0.0) throw InvalidShape("sample_sequences: temperature <= 0");
    validate_tokens(m, prompt, "sample_sequences");
    std::vector<TokenSeq> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        ContextWindow ctx(m);
        for (std::size_t t : prompt) ctx.push(t);
        TokenSeq seq;
        while (seq.size() < m.max_length) {
            const Vector p = next_token_distribution(m, ctx.encode(), temperature);
            const std::size_t tok = detail::draw_categorical(p, rng);
            seq.push_back(tok);
            if (tok == m.eos_token()) break;
            ctx.push(tok);
        }
        out.push_back(std::move(seq));
    }
    return out;
}

/// Sum of per-step log-softmax values along the sequence; always <= 0.
inline double sequence_log_prob(const CategoricalSequenceModel& m,
                                std::span<const std::size_t> prompt,
                                std::span<const std::size_t> seq, double temperature = 1.0) {
    if (temperature <= 0.0) throw InvalidShape("sequence_log_prob: temperature <= 0");
    validate_tokens(m, prompt, "sequence_log_prob");
    validate_tokens(m, seq, "sequence_log_prob");
    ContextWindow ctx(m);
    for (std::size_t t : prompt) ctx.push(t);
    double lp = 0.0;
    for (std::size_t t : seq) {
        const auto row = m.logits.row(ctx.encode());
        Vector scaled(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) scaled[i] = row[i] / temperature;
        lp += scaled[t] - log_sum_exp(scaled);
        ctx.push(t);
    }
    return lp;
}

/// Greedy (argmax) decode.
inline TokenSeq greedy_sequence(const CategoricalSequenceModel& m,
                                std::span<const std::size_t> prompt) {
    validate_tokens(m, prompt, "greedy_sequence");
    ContextWindow ctx(m);
    for (std::size_t t : prompt) ctx.push(t);
    TokenSeq seq;
    while (seq.size() < m.max_length) {
        const std::size_t tok = argmax(m.logits.row(ctx.encode()));
        seq.push_back(tok);
        if (tok == m.eos_token()) break;
        ctx.push(tok);
    }
    return seq;
}

/// The complete outcome space for (vocab, max_length): every EOS-terminated
/// sequence plus every truncated max-length sequence, in a fixed canonical
/// order shared by all models of the same shape.
inline std::vector<TokenSeq> enumerate_outcomes(std::size_t vocab, std::size_t max_length) {
    const std::size_t eos = vocab - 1;
    std::vector<TokenSeq> outcomes;
    TokenSeq content;
    auto rec = [&](auto&& self) -> void {
        if (content.size() < max_length) {
            TokenSeq with_eos = content;
            with_eos.push_back(eos);
            outcomes.push_back(std::move(with_eos));
            for (std::size_t t = 0; t + 1 < vocab; ++t) {
                content.push_back(t);
                self(self);
                content.pop_back();
            }
        } else {
            outcomes.push_back(content);
        }
    };
    rec(rec);
    return outcomes;
}

/// Probability of each enumerated outcome; sums to one.
inline Vector outcome_probabilities(const CategoricalSequenceModel& m,
                                    std::span<const std::size_t> prompt,
                                    const std::vector<TokenSeq>& outcomes,
                                    double temperature = 1.0) {
    Vector probs(outcomes.size(), 0.0);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        probs[i] = std::exp(sequence_log_prob(m, prompt, outcomes[i], temperature));
    }
    return probs;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace detail {

template <typename LossGradFn>
CategoricalSequenceModel train_sequence_impl(const CategoricalSequenceModel& init,
                                             std::size_t epochs, double lr,
                                             const LossGradFn& loss_grad, const char* what) {
    if (epochs < 1) throw InvalidShape(std::string(what) + ": epochs must be >= 1");
    CategoricalSequenceModel model = init;
    AdamState state(model.logits.data.size());
    const AdamConfig cfg{lr, 0.9, 0.999, 1e-8};
    Vector grad;
    double initial_loss = 0.0;
    double best_loss = 0.0;
    Vector best_params = model.logits.data;
    for (std::size_t e = 0; e < epochs; ++e) {
        const double loss = loss_grad(model, grad);
        if (!std::isfinite(loss))
            throw NonFiniteLoss(std::string(what) + ": diverged at epoch " + std::to_string(e));
        if (e == 0) {
            initial_loss = loss;
            best_loss = loss;
        } else if (loss < best_loss) {
            best_loss = loss;
            best_params = model.logits.data;
        }
        state.step(model.logits.data, grad, cfg);
    }
    Vector tmp;
    if (loss_grad(model, tmp) > initial_loss) model.logits.data = best_params;
    return model;
}

}  // namespace detail

/// Objective L^(k) and its gradient over the logits table:
/// mean over prompts of -(1/k) sum_i log p_S(y_i | prompt). k = 1 is the
/// single-response surrogate.
inline double sequence_objective_grad(const CategoricalSequenceModel& m,
                                      const std::vector<TokenSeq>& prompts,
                                      const std::vector<std::vector<TokenSeq>>& samples_per_prompt,
                                      Vector& grad) {
    if (prompts.size() != samples_per_prompt.size())
        throw DimensionMismatch("sequence_objective_grad: prompt/sample counts");
    grad.assign(m.logits.data.size(), 0.0);
    double loss = 0.0;
    const double inv_prompts = 1.0 / static_cast<double>(prompts.size());
    for (std::size_t p = 0; p < prompts.size(); ++p) {
        const auto& samples = samples_per_prompt[p];
        if (samples.empty())
            throw InsufficientSamples("sequence_objective_grad: k must be >= 1 per prompt");
        const double w = inv_prompts / static_cast<double>(samples.size());
        for (const TokenSeq& seq : samples) {
            validate_tokens(m, seq, "sequence_objective_grad");
            ContextWindow ctx(m);
            for (std::size_t t : prompts[p]) ctx.push(t);
            for (std::size_t tok : seq) {
                const std::size_t row = ctx.encode();
                const Vector prob = softmax(m.logits.row(row));
                loss -= w * std::log(std::max(prob[tok], 1e-300));
                double* g = grad.data() + row * m.logits.cols;
                for (std::size_t v = 0; v < m.logits.cols; ++v)
                    g[v] += w * (prob[v] - (v == tok ? 1.0 : 0.0));
                ctx.push(tok);
            }
        }
    }
    return loss;
}

/// Trains on raw teacher samples by minimizing L^(k) with full-batch Adam.
inline CategoricalSequenceModel train_sequence_student(
    const CategoricalSequenceModel& init, const std::vector<TokenSeq>& prompts,
    const std::vector<std::vector<TokenSeq>>& teacher_samples, std::size_t epochs, double lr) {
    for (const auto& prompt : prompts) validate_tokens(init, prompt, "train_sequence_student");
    return detail::train_sequence_impl(
        init, epochs, lr,
        [&](const CategoricalSequenceModel& m, Vector& grad) {
            return sequence_objective_grad(m, prompts, teacher_samples, grad);
        },
        "train_sequence_student");
}

/// Weighted per-context cross-entropy target, used by the averaging and
/// variance-weighting strategies.
struct ContextTarget {
    std::size_t context;
    double weight;
    Vector dist;  // target next-token distribution
};

inline CategoricalSequenceModel train_sequence_to_targets(const CategoricalSequenceModel& init,
                                                          const std::vector<ContextTarget>& targets,
                                                          std::size_t epochs, double lr) {
    if (targets.empty()) throw InsufficientSamples("train_sequence_to_targets: no targets");
    double total_w = 0.0;
    for (const auto& t : targets) total_w += t.weight;
    if (total_w <= 0.0) throw InvalidShape("train_sequence_to_targets: zero total weight");

    return detail::train_sequence_impl(
        init, epochs, lr,
        [&](const CategoricalSequenceModel& m, Vector& grad) {
            grad.assign(m.logits.data.size(), 0.0);
            double loss = 0.0;
            for (const auto& t : targets) {
                const double w = t.weight / total_w;
                const Vector prob = softmax(m.logits.row(t.context));
                double* g = grad.data() + t.context * m.logits.cols;
                for (std::size_t v = 0; v < m.logits.cols; ++v) {
                    loss -= w * t.dist[v] * std::log(std::max(prob[v], 1e-300));
                    g[v] += w * (prob[v] - t.dist[v]);
                }
            }
            return loss;
        },
        "train_sequence_to_targets");
}

/// Per-context (context, next-token) counts collected from sampled sequences;
/// the empirical next-token distribution per visited context, weighted by
/// visit count.
inline std::vector<ContextTarget> empirical_context_targets(
    const CategoricalSequenceModel& shape, std::span<const std::size_t> prompt,
    const std::vector<TokenSeq>& samples) {
    std::vector<double> counts(shape.context_count() * shape.vocab_size, 0.0);
    for (const TokenSeq& seq : samples) {
        validate_tokens(shape, seq, "empirical_context_targets");
        ContextWindow ctx(shape);
        for (std::size_t t : prompt) ctx.push(t);
        for (std::size_t tok : seq) {
            counts[ctx.encode() * shape.vocab_size + tok] += 1.0;
            ctx.push(tok);
        }
    }
    std::vector<ContextTarget> targets;
    for (std::size_t c = 0; c < shape.context_count(); ++c) {
        double total = 0.0;
        for (std::size_t v = 0; v < shape.vocab_size; ++v)
            total += counts[c * shape.vocab_size + v];
        if (total == 0.0) continue;
        ContextTarget t;
        t.context = c;
        t.weight = total;
        t.dist.assign(shape.vocab_size, 0.0);
        for (std::size_t v = 0; v < shape.vocab_size; ++v)
            t.dist[v] = counts[c * shape.vocab_size + v] / total;
        targets.push_back(std::move(t));
    }
    return targets;
}

}  // namespace distlab
