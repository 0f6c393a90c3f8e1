#include "defrag/binarizer.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <unordered_set>

namespace defrag {

StatementTable collect_statements(const TreeEnsemble& ensemble, bool deduplicate) {
    StatementTable table;
    for (const auto& wt : ensemble.trees) {
        for (const auto& node : wt.tree.nodes) {
            if (const auto* in = std::get_if<InternalNode>(&node)) table.statements.push_back({in->feature, in->threshold});
        }
    }
    table.raw_count = table.statements.size();
    std::stable_sort(table.statements.begin(), table.statements.end());
    if (deduplicate) {
        table.statements.erase(std::unique(table.statements.begin(), table.statements.end()), table.statements.end());
    }
    if (table.empty()) {
        warn("ensemble has no internal nodes; the statement table is empty");
    } else if (deduplicate && table.size() != table.raw_count) {
        warn(std::to_string(table.raw_count) + " internal nodes collapse to " + std::to_string(table.size()) +
             " distinct statements (use --no-dedup to keep duplicates)");
    }
    return table;
}

Eigen::VectorXd binarize(std::span<const double> x, const StatementTable& table) {
    Eigen::VectorXd s(static_cast<Index>(table.size()));
    for (std::size_t l = 0; l < table.size(); ++l) s(static_cast<Index>(l)) = x[table[l].feature] > table[l].threshold ? 1.0 : 0.0;
    return s;
}

Eigen::MatrixXd binarize_rows(const Eigen::MatrixXd& X, const StatementTable& table) {
    const auto L = static_cast<Index>(table.size());
    Eigen::MatrixXd S(X.rows(), L);
    for (Index l = 0; l < L; ++l) {
        const auto& st = table[static_cast<std::size_t>(l)];
        if (st.feature >= X.cols()) throw Error("statement references feature " + std::to_string(st.feature) + " beyond the data");
        S.col(l) = (X.col(st.feature).array() > st.threshold).cast<double>();
    }
    return S;
}

std::vector<Trit> region_to_eta(std::span<const PathStatement> region, const StatementTable& table) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    int max_feature = -1;
    for (const auto& st : region) max_feature = std::max(max_feature, st.feature);
    for (const auto& st : table.statements) max_feature = std::max(max_feature, st.feature);

    // Region extent per feature: (lower, upper].
    std::vector<double> lower(static_cast<std::size_t>(max_feature + 1), -inf);
    std::vector<double> upper(static_cast<std::size_t>(max_feature + 1), inf);
    for (const auto& st : region) {
        if (st.side == Side::greater) {
            lower[st.feature] = std::max(lower[st.feature], st.threshold);
        } else {
            upper[st.feature] = std::min(upper[st.feature], st.threshold);
        }
    }
    for (std::size_t d = 0; d < lower.size(); ++d) {
        if (lower[d] >= upper[d]) throw Error("contradictory statements: empty region on feature " + std::to_string(d));
    }

    std::vector<Trit> eta;
    eta.reserve(table.size());
    for (const auto& st : table.statements) {
        if (st.threshold <= lower[st.feature]) {
            eta.push_back(Trit::one);
        } else if (st.threshold >= upper[st.feature]) {
            eta.push_back(Trit::zero);
        } else {
            eta.push_back(Trit::free);
        }
    }
    return eta;
}

Index count_distinct_rows(const Eigen::MatrixXd& bits) {
    std::unordered_set<std::string> seen;
    std::string key(static_cast<std::size_t>(bits.cols()), '0');
    for (Index n = 0; n < bits.rows(); ++n) {
        for (Index l = 0; l < bits.cols(); ++l) key[static_cast<std::size_t>(l)] = bits(n, l) > 0.5 ? '1' : '0';
        seen.insert(key);
    }
    return static_cast<Index>(seen.size());
}

}  // namespace defrag
