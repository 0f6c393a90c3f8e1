#pragma once

#include "defrag/fab.hpp"

#include <string>
#include <vector>

namespace defrag {

struct CompareRow {
    std::string method;  // "FAB" or "EM"
    Index regions = 0;
    double train_error = 0;  // mean-normalized
    double test_error = 0;
    double wall_seconds = 0;
    int restarts = 0;
    std::uint64_t seed = 0;
};

struct CompareReport {
    std::vector<CompareRow> rows;  // FAB first, then one EM row per K

    const CompareRow& fab() const { return rows.front(); }
    double em_total_seconds() const;
    const CompareRow& best_em_by_test() const;
    std::string to_csv() const;
};

// FAB with restarts against an EM sweep over k_range, both with
// config.restarts initializations and config.seed.
template <typename Scalar>
CompareReport compare_fab_em(const BinarizedDataset<Scalar>& train, const BinarizedDataset<Scalar>& test,
                             const FabConfig& config, const std::vector<Index>& k_range,
                             const EmOptions& em_options = {}) {
    CompareReport report;
    const auto fab = fit_with_restarts(train, config);
    report.rows.push_back({"FAB", fab.best.model.regions(), double(mean_model_error(train, fab.best.model)),
                           double(mean_model_error(test, fab.best.model)), fab.total_seconds, config.restarts, config.seed});

    EmOptions options = em_options;
    options.tol = config.outer_tol;
    options.max_iter = config.outer_max_iter;
    const auto sweep = em_sweep(train, &test, k_range, config.restarts, config.seed, options, config.threads);
    for (const auto& e : sweep.entries) {
        report.rows.push_back({"EM", e.regions, e.train_error, e.test_error, e.seconds, config.restarts, config.seed});
    }
    return report;
}

}  // namespace defrag
