#pragma once

#include "defrag/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace defrag {

using NodeId = std::int32_t;

struct InternalNode {
    int feature = 0;
    double threshold = 0.0;
    NodeId left = -1;   // taken when x[feature] <= threshold
    NodeId right = -1;  // taken when x[feature] > threshold
};

// Regression leaves hold one value; classification leaves hold a class
// probability vector.
struct Leaf {
    std::vector<double> value;

    double scalar() const { return value.front(); }
    int vote() const;  // argmax, ties to the lowest class
};

using TreeNode = std::variant<InternalNode, Leaf>;

struct DecisionTree {
    std::vector<TreeNode> nodes;
    NodeId root = 0;

    bool is_leaf(NodeId id) const { return std::holds_alternative<Leaf>(nodes.at(id)); }
    NodeId apply_index(std::span<const double> x) const;
    const Leaf& apply(std::span<const double> x) const { return std::get<Leaf>(nodes[apply_index(x)]); }
    std::vector<NodeId> leaves() const;
    std::size_t internal_count() const;
};

struct WeightedTree {
    double weight = 1.0;
    DecisionTree tree;
};

struct TreeEnsemble {
    Task task = Task::regression;
    int n_classes = 0;  // classification only
    int n_features = 0;
    std::vector<WeightedTree> trees;

    // Throws ParseError naming the offending tree/node.
    void validate() const;
};

enum class Side { greater, less_equal };

// One statement `x[feature] > threshold` or its negation.
struct PathStatement {
    int feature = 0;
    double threshold = 0.0;
    Side side = Side::greater;

    bool holds(std::span<const double> x) const {
        const bool gt = x[feature] > threshold;
        return side == Side::greater ? gt : !gt;
    }
};

// Statements along the root-to-leaf path, in path order.
std::vector<PathStatement> leaf_region(const DecisionTree& tree, NodeId leaf);

const Leaf& tree_apply(const DecisionTree& tree, std::span<const double> x);

// Weighted average (regression) or weighted vote (classification; returns the
// winning class index as a double).
double ensemble_predict(const TreeEnsemble& ensemble, std::span<const double> x);
Eigen::VectorXd ensemble_predict(const TreeEnsemble& ensemble, const Eigen::MatrixXd& X);

TreeEnsemble load_ensemble(const std::filesystem::path& path);
void save_ensemble(const TreeEnsemble& ensemble, const std::filesystem::path& path);
TreeEnsemble ensemble_from_json_text(const std::string& text);
std::string ensemble_to_json_text(const TreeEnsemble& ensemble);

struct ForestParams {
    int n_trees = 100;
    int max_depth = -1;        // negative: unlimited
    int min_leaf = 5;          // minimum (bootstrap) samples per child
    int feature_subsample = 0; // features tried per split; 0 picks sqrt(D) or D/3
    bool bootstrap = true;
};

struct Dataset;

// Bagged CART. Tree t draws from the stream derive_seed(seed, t), so the
// forest is deterministic and trees are independent of build order.
TreeEnsemble train_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed);

}  // namespace defrag
