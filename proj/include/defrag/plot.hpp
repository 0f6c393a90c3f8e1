#pragma once

#include "defrag/data.hpp"
#include "defrag/ensemble.hpp"
#include "defrag/rules.hpp"

#include <optional>
#include <string>

namespace defrag {

struct Box {
    double x0 = 0, x1 = 1;  // first feature
    double y0 = 0, y1 = 1;  // second feature
};

// Rule intervals on features 0 and 1 clipped to the domain; nullopt when the
// clipped box is empty.
std::optional<Box> rule_box(const Rule& rule, const Box& domain);

// Standalone SVG: data scatter colored by target plus one <rect class="rule">
// per rule. Rects carry their data coordinates in data-x0/x1/y0/y1.
std::string plot_rules_svg(const Dataset& data, const RuleSet& rules, const Box& domain = {});

// Same scatter with the leaf boxes of the first `max_trees` trees.
std::string plot_ensemble_svg(const Dataset& data, const TreeEnsemble& ensemble, int max_trees = 5, const Box& domain = {});

}  // namespace defrag
