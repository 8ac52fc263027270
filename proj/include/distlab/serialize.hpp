#pragma once

#include <fstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "distlab/errors.hpp"
#include "distlab/models.hpp"
#include "distlab/sequence.hpp"

namespace distlab {

using AnyModel = std::variant<LinearModel, MlpModel, LogisticModel, CategoricalSequenceModel>;

// Versioned JSON model documents. Field names are part of the on-disk format.
constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("model json: expected matrix rows");
    Matrix m(j.size(), j.front().size(), 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        if (j[i].size() != m.cols) throw ParseError("model json: ragged matrix");
        for (std::size_t c = 0; c < m.cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

}  // namespace detail

inline nlohmann::json to_json(const LinearModel& m) {
    return {{"version", kModelFormatVersion}, {"kind", "linear"}, {"theta", m.theta}};
}

inline nlohmann::json to_json(const MlpModel& m) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        layers.push_back({{"weights", detail::matrix_to_json(m.layer_weights[l])},
                          {"bias", m.layer_biases[l]}});
    }
    return {{"version", kModelFormatVersion},
            {"kind", "mlp"},
            {"activation", m.activation == Activation::relu ? "relu" : "tanh"},
            {"layers", std::move(layers)}};
}

inline nlohmann::json to_json(const LogisticModel& m) {
    return {{"version", kModelFormatVersion},
            {"kind", "logistic"},
            {"weights", detail::matrix_to_json(m.weights)},
            {"biases", m.biases}};
}

inline nlohmann::json to_json(const CategoricalSequenceModel& m) {
    return {{"version", kModelFormatVersion},
            {"kind", "sequence"},
            {"vocab_size", m.vocab_size},
            {"context_order", m.context_order},
            {"max_length", m.max_length},
            {"logits", detail::matrix_to_json(m.logits)}};
}

inline nlohmann::json to_json(const AnyModel& m) {
    return std::visit([](const auto& model) { return to_json(model); }, m);
}

inline AnyModel model_from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<int>() != kModelFormatVersion)
        throw ParseError("model json: unsupported version");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        LinearModel m;
        m.theta = j.at("theta").get<Vector>();
        return m;
    }
    if (kind == "mlp") {
        MlpModel m;
        const std::string act = j.at("activation").get<std::string>();
        if (act == "relu") {
            m.activation = Activation::relu;
        } else if (act == "tanh") {
            m.activation = Activation::tanh;
        } else {
            throw ParseError("model json: unknown activation " + act);
        }
        for (const auto& layer : j.at("layers")) {
            m.layer_weights.push_back(detail::matrix_from_json(layer.at("weights")));
            m.layer_biases.push_back(layer.at("bias").get<Vector>());
        }
        if (m.layer_weights.empty()) throw ParseError("model json: mlp with no layers");
        return m;
    }
    if (kind == "logistic") {
        LogisticModel m;
        m.weights = detail::matrix_from_json(j.at("weights"));
        m.biases = j.at("biases").get<Vector>();
        return m;
    }
    if (kind == "sequence") {
        CategoricalSequenceModel m;
        m.vocab_size = j.at("vocab_size").get<std::size_t>();
        m.context_order = j.at("context_order").get<std::size_t>();
        m.max_length = j.at("max_length").get<std::size_t>();
        m.logits = detail::matrix_from_json(j.at("logits"));
        if (m.logits.rows != m.context_count() || m.logits.cols != m.vocab_size)
            throw ParseError("model json: sequence logits shape");
        return m;
    }
    throw ParseError("model json: unknown kind " + kind);
}

inline void save_model(const AnyModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_model: cannot open " + path);
    out << to_json(m).dump(2) << "\n";
    if (!out) throw IoError("save_model: write failed for " + path);
}

inline AnyModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_model: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_model: " + std::string(e.what()));
    }
    return model_from_json(j);
}

}  // namespace distlab
