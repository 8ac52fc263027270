#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "distlab/distill.hpp"
#include "distlab/errors.hpp"
#include "distlab/matrix.hpp"
#include "distlab/rng.hpp"
#include "distlab/sequence.hpp"

namespace distlab {

enum class DatasetKind { regression, classification, sequence_prompts };

struct Dataset {
    Matrix x;
    Vector y;                          // regression targets
    std::vector<std::size_t> labels;   // classification targets
    std::vector<TokenSeq> prompts;     // sequence_prompts kind
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    DatasetKind kind{DatasetKind::regression};

    Matrix rows_at(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), x.cols, 0.0);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const auto row = x.row(idx[i]);
            std::copy(row.begin(), row.end(),
                      out.data.begin() + static_cast<std::ptrdiff_t>(i * x.cols));
        }
        return out;
    }

    Matrix train_x() const { return rows_at(train_idx); }
    Matrix test_x() const { return rows_at(test_idx); }

    Vector train_y() const {
        Vector out(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) out[i] = y[train_idx[i]];
        return out;
    }
    Vector test_y() const {
        Vector out(test_idx.size());
        for (std::size_t i = 0; i < test_idx.size(); ++i) out[i] = y[test_idx[i]];
        return out;
    }
    std::vector<std::size_t> train_labels() const {
        std::vector<std::size_t> out(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) out[i] = labels[train_idx[i]];
        return out;
    }
    std::vector<std::size_t> test_labels() const {
        std::vector<std::size_t> out(test_idx.size());
        for (std::size_t i = 0; i < test_idx.size(); ++i) out[i] = labels[test_idx[i]];
        return out;
    }

    RegressionTask regression_task() const {
        RegressionTask t;
        t.x_train = train_x();
        t.x_test = test_x();
        t.var_y = sample_variance(train_y());
        return t;
    }
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, RngStream& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

/// Standardize features to train mean 0 / std 1; constant columns become
/// all-zero instead of dividing by a vanishing std.
inline void standardize_features(Matrix& x, std::span<const std::size_t> train_idx) {
    for (std::size_t j = 0; j < x.cols; ++j) {
        double m = 0.0;
        for (std::size_t i : train_idx) m += x(i, j);
        m /= static_cast<double>(train_idx.size());
        double var = 0.0;
        for (std::size_t i : train_idx) {
            const double d = x(i, j) - m;
            var += d * d;
        }
        var /= static_cast<double>(train_idx.size());
        const double std = std::sqrt(var);
        const double scale = std < 1e-12 ? 0.0 : 1.0 / std;
        for (std::size_t i = 0; i < x.rows; ++i) x(i, j) = (x(i, j) - m) * scale;
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_numeric_cell(const std::string& cell, std::size_t row, std::size_t col) {
    std::size_t consumed = 0;
    double value = 0.0;
    std::string trimmed = cell;
    const auto first = trimmed.find_first_not_of(" \t\r");
    const auto last = trimmed.find_last_not_of(" \t\r");
    if (first == std::string::npos) {
        throw NonNumericCell("csv row " + std::to_string(row) + " col " + std::to_string(col) +
                             ": empty cell");
    }
    trimmed = trimmed.substr(first, last - first + 1);
    try {
        value = std::stod(trimmed, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != trimmed.size()) {
        throw NonNumericCell("csv row " + std::to_string(row) + " col " + std::to_string(col) +
                             ": not numeric: '" + cell + "'");
    }
    return value;
}

}  // namespace detail

/// Splits indices into train/test. Classification uses a per-class stratified
/// split that preserves class proportions within one example per class.
inline void split_dataset(Dataset& ds, double split_ratio, std::uint64_t seed) {
    if (split_ratio <= 0.0 || split_ratio >= 1.0)
        throw InvalidShape("split_dataset: ratio must be in (0,1)");
    const std::size_t n = ds.x.rows;
    // distinct stream: the shuffle must not share draws with data generation
    RngStream rng(seed, mix_streams(stream_domain::kDataset, 0x5b));
    ds.train_idx.clear();
    ds.test_idx.clear();

    if (ds.kind == DatasetKind::classification) {
        std::size_t classes = 0;
        for (std::size_t lab : ds.labels) classes = std::max(classes, lab + 1);
        std::vector<std::vector<std::size_t>> by_class(classes);
        for (std::size_t i = 0; i < n; ++i) by_class[ds.labels[i]].push_back(i);
        for (auto& members : by_class) {
            detail::shuffle_indices(members, rng);
            const std::size_t take = static_cast<std::size_t>(
                std::lround(split_ratio * static_cast<double>(members.size())));
            for (std::size_t i = 0; i < members.size(); ++i) {
                (i < take ? ds.train_idx : ds.test_idx).push_back(members[i]);
            }
        }
        std::sort(ds.train_idx.begin(), ds.train_idx.end());
        std::sort(ds.test_idx.begin(), ds.test_idx.end());
    } else {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        detail::shuffle_indices(idx, rng);
        const std::size_t take =
            static_cast<std::size_t>(std::lround(split_ratio * static_cast<double>(n)));
        ds.train_idx.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
        ds.test_idx.assign(idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
        std::sort(ds.train_idx.begin(), ds.train_idx.end());
        std::sort(ds.test_idx.begin(), ds.test_idx.end());
    }
    if (ds.train_idx.empty() || ds.test_idx.empty())
        throw InvalidShape("split_dataset: empty train or test split");
}

/// CSV ingestion: header row, numeric cells, last column is the target
/// (real-valued for regression, integer class index for classification).
/// Features are standardized with training statistics only.
inline Dataset load_dataset_csv(const std::string& path, DatasetKind kind, double split_ratio,
                                std::uint64_t seed) {
    if (kind == DatasetKind::sequence_prompts)
        throw ConfigError("load_dataset_csv: sequence_prompts cannot be loaded from CSV");
    std::ifstream in(path);
    if (!in) throw IoError("load_dataset_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("load_dataset_csv: " + path + " is empty");
    const std::size_t n_cols = detail::split_csv_line(line).size();
    if (n_cols < 2)
        throw ParseError("load_dataset_csv: header needs at least one feature and a target");

    std::vector<Vector> rows;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != n_cols) {
            throw ParseError("csv row " + std::to_string(row_no) + ": expected " +
                             std::to_string(n_cols) + " cells, got " +
                             std::to_string(cells.size()));
        }
        Vector row(n_cols);
        for (std::size_t c = 0; c < n_cols; ++c)
            row[c] = detail::parse_numeric_cell(cells[c], row_no, c + 1);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw EmptyDataset("load_dataset_csv: " + path + " has no data rows");

    Dataset ds;
    ds.kind = kind;
    ds.x = Matrix(rows.size(), n_cols - 1, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j + 1 < n_cols; ++j) ds.x(i, j) = rows[i][j];
        const double target = rows[i][n_cols - 1];
        if (kind == DatasetKind::classification) {
            if (target < 0.0 || target != std::floor(target)) {
                throw NonNumericCell("csv row " + std::to_string(i + 2) +
                                     ": class label must be a nonnegative integer");
            }
            ds.labels.push_back(static_cast<std::size_t>(target));
            ds.y.push_back(target);
        } else {
            ds.y.push_back(target);
        }
    }

    split_dataset(ds, split_ratio, seed);
    detail::standardize_features(ds.x, ds.train_idx);
    return ds;
}

/// Synthetic regression with i.i.d. standard-normal design and
/// y = X theta* + eta. The design is population-standardized by construction,
/// so no re-standardization is applied.
inline Dataset synth_regression(std::size_t n, std::size_t d, std::span<const double> theta_star,
                                double sigma_eta, std::uint64_t seed, double split_ratio = 0.8) {
    if (n <= d) throw InvalidShape("synth_regression: need n > d");
    if (theta_star.size() != d) throw InvalidShape("synth_regression: theta_star size");
    if (sigma_eta < 0.0) throw NegativeStd("synth_regression: sigma_eta < 0");
    Dataset ds;
    ds.kind = DatasetKind::regression;
    RngStream rng(seed, stream_domain::kDataset);
    ds.x = gaussian_matrix(rng, n, d, 0.0, 1.0);
    ds.y = matvec(ds.x, theta_star);
    for (double& v : ds.y) v += sigma_eta == 0.0 ? 0.0 : rng.normal(0.0, sigma_eta);
    split_dataset(ds, split_ratio, seed);
    return ds;
}

/// Gaussian blobs with class means `separation` apart and balanced labels.
inline Dataset synth_classification(std::size_t n, std::size_t d, std::size_t classes,
                                    double separation, std::uint64_t seed,
                                    double split_ratio = 0.8) {
    if (classes < 2) throw InvalidShape("synth_classification: classes must be >= 2");
    if (d < 1 || n < classes) throw InvalidShape("synth_classification: shape");
    Dataset ds;
    ds.kind = DatasetKind::classification;
    RngStream rng(seed, stream_domain::kDataset);
    ds.x = Matrix(n, d, 0.0);
    // axis-aligned means at distance `separation` from each other
    const double offset = separation / std::sqrt(2.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = i % classes;
        const std::size_t axis = label % d;
        const double level = offset * (1.0 + static_cast<double>(label / d));
        for (std::size_t j = 0; j < d; ++j) ds.x(i, j) = rng.normal(0.0, 1.0);
        ds.x(i, axis) += level;
        ds.labels.push_back(label);
        ds.y.push_back(static_cast<double>(label));
    }
    split_dataset(ds, split_ratio, seed);
    return ds;
}

/// Distinct random prompts of content tokens for the toy sequence tasks.
inline std::vector<TokenSeq> random_prompts(std::size_t count, std::size_t vocab_size,
                                            std::size_t min_len, std::size_t max_len,
                                            RngStream& rng) {
    if (vocab_size < 2) throw InvalidShape("random_prompts: vocab too small");
    std::vector<TokenSeq> prompts;
    prompts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t len = min_len + rng.uniform_index(max_len - min_len + 1);
        TokenSeq p(len);
        // content tokens only (EOS excluded)
        for (std::size_t j = 0; j < len; ++j) p[j] = rng.uniform_index(vocab_size - 1);
        prompts.push_back(std::move(p));
    }
    return prompts;
}

}  // namespace distlab
