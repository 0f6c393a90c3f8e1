#pragma once

#include "defrag/model_io.hpp"

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace defrag {

// lower < x[feature] <= upper
struct Interval {
    int feature = 0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    bool contains(double x) const { return x > lower && x <= upper; }
    bool operator==(const Interval&) const = default;
};

struct Rule {
    std::vector<Interval> intervals;  // constrained features only, ascending
    double value = 0;                 // regression mean or class index
    Index region = 0;
    double alpha = 0;
    bool consistent = true;
    std::vector<int> dropped_features;  // constraints removed because they contradicted

    bool unconstrained() const { return intervals.empty(); }
    bool operator==(const Rule& other) const {
        return intervals == other.intervals && value == other.value && region == other.region && alpha == other.alpha;
    }
};

struct RuleSet {
    Task task = Task::regression;
    std::vector<Rule> rules;

    bool operator==(const RuleSet& other) const { return task == other.task && rules == other.rules; }
};

// Rounds row k of eta with threshold tau in (0, 0.5]: eta >= 1 - tau keeps
// "x > b", eta <= tau keeps "x <= b", anything between is dropped. Kept
// statements on one feature collapse to the tightest interval.
//
// The default keeps only statements a region has effectively decided; with
// tau = 0.5 every weakly-informative statement survives and the rule shrinks
// to a sliver around the feature medians.
Rule eta_to_rule(const Model& model, Index k, double tau = 1e-3);
RuleSet model_to_rules(const Model& model, double tau = 1e-3);

bool rule_covers(const Rule& rule, std::span<const double> x);

// Rules covering each row.
std::vector<int> covering_counts(const RuleSet& rules, const Eigen::MatrixXd& X);
// Rows covered by each rule.
std::vector<Index> rule_coverage(const RuleSet& rules, const Eigen::MatrixXd& X);
// Mean number of rules covering a row.
double overlap_metric(const RuleSet& rules, const Eigen::MatrixXd& X);

enum class RuleStyle { text, csv, structured };

// Text: one "y = v ⇐ x1 > b, x2 ≤ b" line per rule. CSV: one row per rule with
// "d:lower<..<=upper" interval tokens. Structured: JSON that reloads exactly.
std::string format_rules(const RuleSet& rules, RuleStyle style, const std::vector<std::string>& feature_names = {});
RuleSet rules_from_json_text(const std::string& text);

void save_rules(const RuleSet& rules, const std::filesystem::path& path);
RuleSet load_rules(const std::filesystem::path& path);

}  // namespace defrag
