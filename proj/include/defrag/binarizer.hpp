#pragma once

#include "defrag/common.hpp"
#include "defrag/ensemble.hpp"

#include <span>
#include <vector>

namespace defrag {

struct Statement {
    int feature = 0;
    double threshold = 0.0;

    auto operator<=>(const Statement&) const = default;
};

// Statements of all internal nodes in canonical (feature, threshold) order.
struct StatementTable {
    std::vector<Statement> statements;
    std::size_t raw_count = 0;  // internal nodes seen before deduplication

    std::size_t size() const { return statements.size(); }
    bool empty() const { return statements.empty(); }
    const Statement& operator[](std::size_t i) const { return statements[i]; }
    bool operator==(const StatementTable& other) const { return statements == other.statements; }
};

StatementTable collect_statements(const TreeEnsemble& ensemble, bool deduplicate = true);

// s_l(x) = I(x[d_l] > b_l).
Eigen::VectorXd binarize(std::span<const double> x, const StatementTable& table);
Eigen::MatrixXd binarize_rows(const Eigen::MatrixXd& X, const StatementTable& table);

enum class Trit : char { zero = '0', one = '1', free = '*' };

// Per statement: 1 when the region forces x[d] > b, 0 when it forces x[d] <= b,
// free when the boundary does not constrain the region.
std::vector<Trit> region_to_eta(std::span<const PathStatement> region, const StatementTable& table);

Index count_distinct_rows(const Eigen::MatrixXd& bits);

}  // namespace defrag
