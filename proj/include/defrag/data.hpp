#pragma once

#include "defrag/binarizer.hpp"
#include "defrag/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace defrag {

struct Dataset {
    Task task = Task::regression;
    int n_classes = 0;  // classification only
    Eigen::MatrixXd X;  // N x D
    Eigen::VectorXd y;  // regression target, or class index in [0, n_classes)
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;  // label dictionary, index -> original text

    Index rows() const { return X.rows(); }
    Index cols() const { return X.cols(); }
    void validate() const;
};

struct CsvOptions {
    bool has_header = true;
    // Column holding the target, by name or 0-based index; empty means last.
    std::string target_column;
    Task task = Task::regression;
    // When false every column is a feature and y is left empty.
    bool has_target = true;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);
Dataset parse_csv(const std::string& text, const CsvOptions& options);
// Features first, target last, header always written.
void save_csv(const Dataset& data, const std::filesystem::path& path);

// Decision boundary of the second synthetic problem.
double synthetic2_boundary(double x1);

// x ~ U[0,1)^2; clean label XOR(x1 > 0.5, x2 > 0.5) flipped with probability noise.
// Per row the stream yields x1, x2, then the flip variate.
Dataset gen_synthetic1(Index n, double noise, std::uint64_t seed);
// Same as synthetic1 with clean label I(x2 > synthetic2_boundary(x1)).
Dataset gen_synthetic2(Index n, double noise, std::uint64_t seed);

// Deterministic shuffle; the first round(fraction * N) shuffled rows form the
// train part.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double fraction, std::uint64_t seed);
Dataset take_rows(const Dataset& data, const std::vector<Index>& rows);

// Binary features plus fit targets: the input of every fitter.
template <typename Scalar>
struct BinarizedDataset {
    Task task = Task::regression;
    int n_classes = 0;
    Matrix<Scalar> bits;   // N x L, entries in {0, 1}
    Vector<Scalar> target; // regression value or class index
    StatementTable table;

    Index rows() const { return bits.rows(); }
    Index statements() const { return bits.cols(); }
};

template <typename Scalar = double>
BinarizedDataset<Scalar> binarize_dataset(const Dataset& data, const StatementTable& table) {
    BinarizedDataset<Scalar> out;
    out.task = data.task;
    out.n_classes = data.n_classes;
    out.table = table;
    out.bits = binarize_rows(data.X, table).template cast<Scalar>();
    out.target = data.y.template cast<Scalar>();
    return out;
}

// Same as binarize_dataset but with the targets replaced.
template <typename Scalar = double>
BinarizedDataset<Scalar> binarize_dataset(const Dataset& data, const StatementTable& table,
                                          const Eigen::VectorXd& targets) {
    auto out = binarize_dataset<Scalar>(data, table);
    out.target = targets.template cast<Scalar>();
    return out;
}

// Number of distinct binary feature vectors in the data.
template <typename Scalar>
Index count_empirical_regions(const BinarizedDataset<Scalar>& data) {
    return count_distinct_rows(data.bits.template cast<double>());
}

}  // namespace defrag
