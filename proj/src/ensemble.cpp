#include "defrag/ensemble.hpp"

#include "defrag/data.hpp"
#include "defrag/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace defrag {

using nlohmann::json;

int Leaf::vote() const {
    return static_cast<int>(std::max_element(value.begin(), value.end()) - value.begin());
}

NodeId DecisionTree::apply_index(std::span<const double> x) const {
    NodeId id = root;
    while (const auto* node = std::get_if<InternalNode>(&nodes[id])) {
        id = x[node->feature] > node->threshold ? node->right : node->left;
    }
    return id;
}

std::vector<NodeId> DecisionTree::leaves() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < static_cast<NodeId>(nodes.size()); ++i) {
        if (is_leaf(i)) out.push_back(i);
    }
    return out;
}

std::size_t DecisionTree::internal_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) {
        return std::holds_alternative<InternalNode>(n);
    }));
}

namespace {

[[noreturn]] void node_error(std::size_t tree, NodeId node, const std::string& what) {
    throw ParseError("tree " + std::to_string(tree) + ", node " + std::to_string(node) + ": " + what);
}

}  // namespace

void TreeEnsemble::validate() const {
    if (trees.empty()) throw ParseError("ensemble has no trees");
    if (n_features < 1) throw ParseError("n_features must be positive");
    if (task == Task::classification && n_classes < 2) throw ParseError("classification needs n_classes >= 2");
    for (std::size_t t = 0; t < trees.size(); ++t) {
        const auto& [weight, tree] = trees[t];
        if (!std::isfinite(weight)) throw ParseError("tree " + std::to_string(t) + ": weight is not finite");
        const auto n = static_cast<NodeId>(tree.nodes.size());
        if (n == 0) throw ParseError("tree " + std::to_string(t) + ": no nodes");
        if (tree.root < 0 || tree.root >= n) node_error(t, tree.root, "dangling node reference (root)");

        std::vector<int> parents(n, 0);
        for (NodeId i = 0; i < n; ++i) {
            if (const auto* node = std::get_if<InternalNode>(&tree.nodes[i])) {
                if (node->feature < 0 || node->feature >= n_features)
                    node_error(t, i, "feature index " + std::to_string(node->feature) + " out of range");
                if (!std::isfinite(node->threshold)) node_error(t, i, "threshold is not finite");
                for (NodeId child : {node->left, node->right}) {
                    if (child < 0 || child >= n) node_error(t, i, "dangling node reference " + std::to_string(child));
                    ++parents[child];
                }
            } else {
                const auto& v = std::get<Leaf>(tree.nodes[i]).value;
                if (task == Task::regression) {
                    if (v.size() != 1) node_error(t, i, "regression leaf must hold one value");
                    if (!std::isfinite(v[0])) node_error(t, i, "leaf value is not finite");
                } else {
                    if (static_cast<int>(v.size()) != n_classes)
                        node_error(t, i, "leaf vector length " + std::to_string(v.size()) + " != n_classes");
                    double sum = 0.0;
                    for (double p : v) {
                        if (!(p >= 0.0)) node_error(t, i, "negative leaf probability");
                        sum += p;
                    }
                    if (std::abs(sum - 1.0) > 1e-9) node_error(t, i, "leaf probabilities do not sum to 1");
                }
            }
        }
        if (parents[tree.root] != 0) node_error(t, tree.root, "root has a parent (cycle)");
        for (NodeId i = 0; i < n; ++i) {
            if (i != tree.root && parents[i] != 1)
                node_error(t, i, parents[i] == 0 ? "unreachable node" : "node has several parents");
        }
        // Each non-root node has exactly one parent, so the graph is a tree iff
        // every node is reachable from the root.
        std::vector<NodeId> stack{tree.root};
        std::size_t seen = 0;
        while (!stack.empty()) {
            const NodeId id = stack.back();
            stack.pop_back();
            if (++seen > static_cast<std::size_t>(n)) break;
            if (const auto* node = std::get_if<InternalNode>(&tree.nodes[id])) {
                stack.push_back(node->left);
                stack.push_back(node->right);
            }
        }
        if (seen != static_cast<std::size_t>(n)) node_error(t, tree.root, "node graph contains a cycle");
    }
}

std::vector<PathStatement> leaf_region(const DecisionTree& tree, NodeId leaf) {
    if (leaf < 0 || leaf >= static_cast<NodeId>(tree.nodes.size())) throw Error("leaf id out of range");
    if (!tree.is_leaf(leaf)) throw Error("node " + std::to_string(leaf) + " is not a leaf");

    std::vector<NodeId> parent(tree.nodes.size(), -1);
    for (NodeId i = 0; i < static_cast<NodeId>(tree.nodes.size()); ++i) {
        if (const auto* node = std::get_if<InternalNode>(&tree.nodes[i])) {
            parent[node->left] = i;
            parent[node->right] = i;
        }
    }
    std::vector<PathStatement> path;
    for (NodeId child = leaf; child != tree.root;) {
        const NodeId up = parent[child];
        if (up < 0) throw Error("leaf " + std::to_string(leaf) + " is not reachable from the root");
        const auto& node = std::get<InternalNode>(tree.nodes[up]);
        path.push_back({node.feature, node.threshold, child == node.right ? Side::greater : Side::less_equal});
        child = up;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

const Leaf& tree_apply(const DecisionTree& tree, std::span<const double> x) { return tree.apply(x); }

double ensemble_predict(const TreeEnsemble& ensemble, std::span<const double> x) {
    if (ensemble.task == Task::regression) {
        double sum = 0.0;
        for (const auto& [w, tree] : ensemble.trees) sum += w * tree.apply(x).scalar();
        return sum;
    }
    std::vector<double> votes(ensemble.n_classes, 0.0);
    for (const auto& [w, tree] : ensemble.trees) votes[tree.apply(x).vote()] += w;
    return static_cast<double>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

Eigen::VectorXd ensemble_predict(const TreeEnsemble& ensemble, const Eigen::MatrixXd& X) {
    Eigen::VectorXd out(X.rows());
    std::vector<double> row(X.cols());
    for (Index n = 0; n < X.rows(); ++n) {
        for (Index d = 0; d < X.cols(); ++d) row[d] = X(n, d);
        out(n) = ensemble_predict(ensemble, row);
    }
    return out;
}

// --- interchange format ----------------------------------------------------

namespace {

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + ": missing '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + ": field '" + key + "' has the wrong type");
    }
}

TreeEnsemble ensemble_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("ensemble document must be a JSON object");
    TreeEnsemble e;
    e.task = parse_task(required<std::string>(doc, "task", "ensemble"));
    e.n_features = required<int>(doc, "n_features", "ensemble");
    if (e.task == Task::classification) e.n_classes = required<int>(doc, "n_classes", "ensemble");
    const auto& trees = doc.find("trees");
    if (trees == doc.end() || !trees->is_array()) throw ParseError("ensemble: 'trees' must be an array");
    for (std::size_t t = 0; t < trees->size(); ++t) {
        const json& jt = (*trees)[t];
        const std::string where = "tree " + std::to_string(t);
        if (!jt.is_object()) throw ParseError(where + ": must be an object");
        WeightedTree wt;
        wt.weight = required<double>(jt, "weight", where);
        wt.tree.root = required<NodeId>(jt, "root", where);
        const auto nodes = jt.find("nodes");
        if (nodes == jt.end() || !nodes->is_array()) throw ParseError(where + ": 'nodes' must be an array");
        for (std::size_t i = 0; i < nodes->size(); ++i) {
            const json& jn = (*nodes)[i];
            const std::string nwhere = where + ", node " + std::to_string(i);
            if (!jn.is_object()) throw ParseError(nwhere + ": must be an object");
            if (jn.contains("value")) {
                Leaf leaf;
                const json& v = jn["value"];
                if (v.is_number()) {
                    leaf.value = {v.get<double>()};
                } else if (v.is_array()) {
                    for (const auto& p : v) {
                        if (!p.is_number()) throw ParseError(nwhere + ": non-numeric leaf entry");
                        leaf.value.push_back(p.get<double>());
                    }
                } else {
                    throw ParseError(nwhere + ": leaf value must be a number or an array");
                }
                if (e.task == Task::classification && v.is_number())
                    throw ParseError(nwhere + ": classification leaf needs a probability vector");
                wt.tree.nodes.emplace_back(std::move(leaf));
            } else {
                InternalNode node;
                node.feature = required<int>(jn, "feature", nwhere);
                node.threshold = required<double>(jn, "threshold", nwhere);
                node.left = required<NodeId>(jn, "left", nwhere);
                node.right = required<NodeId>(jn, "right", nwhere);
                wt.tree.nodes.emplace_back(node);
            }
        }
        e.trees.push_back(std::move(wt));
    }
    e.validate();
    return e;
}

json ensemble_to_json(const TreeEnsemble& e) {
    json doc;
    doc["task"] = std::string(to_string(e.task));
    doc["n_features"] = e.n_features;
    if (e.task == Task::classification) doc["n_classes"] = e.n_classes;
    json trees = json::array();
    for (const auto& [weight, tree] : e.trees) {
        json jt;
        jt["weight"] = weight;
        jt["root"] = tree.root;
        json nodes = json::array();
        for (const auto& node : tree.nodes) {
            if (const auto* in = std::get_if<InternalNode>(&node)) {
                nodes.push_back({{"feature", in->feature}, {"threshold", in->threshold}, {"left", in->left}, {"right", in->right}});
            } else {
                const auto& leaf = std::get<Leaf>(node);
                if (e.task == Task::regression) {
                    nodes.push_back({{"value", leaf.scalar()}});
                } else {
                    nodes.push_back({{"value", leaf.value}});
                }
            }
        }
        jt["nodes"] = std::move(nodes);
        trees.push_back(std::move(jt));
    }
    doc["trees"] = std::move(trees);
    return doc;
}

}  // namespace

TreeEnsemble ensemble_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& ex) {
        throw ParseError(std::string("malformed ensemble document: ") + ex.what());
    }
    return ensemble_from_json(doc);
}

std::string ensemble_to_json_text(const TreeEnsemble& ensemble) { return ensemble_to_json(ensemble).dump() + "\n"; }

TreeEnsemble load_ensemble(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return ensemble_from_json_text(buf.str());
}

void save_ensemble(const TreeEnsemble& ensemble, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << ensemble_to_json_text(ensemble);
    if (!out) throw Error("write failed: " + path.string());
}

// --- CART trainer ----------------------------------------------------------

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const ForestParams& params, int mtry, Rng& rng)
        : data_(data), params_(params), mtry_(mtry), rng_(rng) {}

    DecisionTree build(std::vector<Index> rows) {
        tree_.nodes.clear();
        tree_.root = grow(rows, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    bool classification() const { return data_.task == Task::classification; }

    Leaf make_leaf(const std::vector<Index>& rows) const {
        Leaf leaf;
        if (classification()) {
            leaf.value.assign(data_.n_classes, 0.0);
            for (Index r : rows) leaf.value[static_cast<int>(data_.y(r))] += 1.0;
            for (double& p : leaf.value) p /= static_cast<double>(rows.size());
        } else {
            double sum = 0.0;
            for (Index r : rows) sum += data_.y(r);
            leaf.value = {sum / static_cast<double>(rows.size())};
        }
        return leaf;
    }

    // Impurity times node size: Gini for classification, SSE for regression.
    struct Stats {
        std::vector<double> counts;
        double sum = 0.0, sum_sq = 0.0, n = 0.0;

        void add(double y, bool cls) {
            n += 1.0;
            if (cls) {
                counts[static_cast<int>(y)] += 1.0;
            } else {
                sum += y;
                sum_sq += y * y;
            }
        }
        void remove(double y, bool cls) {
            n -= 1.0;
            if (cls) {
                counts[static_cast<int>(y)] -= 1.0;
            } else {
                sum -= y;
                sum_sq -= y * y;
            }
        }
        double weighted_impurity(bool cls) const {
            if (n <= 0.0) return 0.0;
            if (cls) {
                double sq = 0.0;
                for (double c : counts) sq += c * c;
                return n - sq / n;
            }
            return std::max(0.0, sum_sq - sum * sum / n);
        }
    };

    Split best_split(const std::vector<Index>& rows) {
        const int D = static_cast<int>(data_.cols());
        std::vector<int> features(D);
        std::iota(features.begin(), features.end(), 0);
        // Partial Fisher-Yates: the first mtry entries are the candidates.
        for (int i = 0; i < mtry_; ++i) {
            const auto j = i + static_cast<int>(rng_.below(static_cast<std::uint64_t>(D - i)));
            std::swap(features[i], features[j]);
        }

        const bool cls = classification();
        Stats total;
        total.counts.assign(cls ? data_.n_classes : 0, 0.0);
        for (Index r : rows) total.add(data_.y(r), cls);
        const double parent = total.weighted_impurity(cls);

        Split best;
        std::vector<Index> order = rows;
        for (int f = 0; f < mtry_; ++f) {
            const int feature = features[f];
            std::sort(order.begin(), order.end(), [&](Index a, Index b) {
                return data_.X(a, feature) < data_.X(b, feature);
            });
            Stats left;
            left.counts.assign(total.counts.size(), 0.0);
            Stats right = total;
            const std::size_t n = order.size();
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double y = data_.y(order[i]);
                left.add(y, cls);
                right.remove(y, cls);
                const double lo = data_.X(order[i], feature);
                const double hi = data_.X(order[i + 1], feature);
                if (!(lo < hi)) continue;
                if (i + 1 < static_cast<std::size_t>(params_.min_leaf) || n - i - 1 < static_cast<std::size_t>(params_.min_leaf))
                    continue;
                const double gain = parent - left.weighted_impurity(cls) - right.weighted_impurity(cls);
                if (gain > best.gain + 1e-12) {
                    double threshold = lo + (hi - lo) / 2.0;
                    if (!(threshold < hi)) threshold = lo;
                    best = {feature, threshold, gain};
                }
            }
        }
        return best;
    }

    NodeId grow(const std::vector<Index>& rows, int depth) {
        const auto id = static_cast<NodeId>(tree_.nodes.size());
        const bool depth_ok = params_.max_depth < 0 || depth < params_.max_depth;
        if (!depth_ok || rows.size() < 2 * static_cast<std::size_t>(std::max(1, params_.min_leaf))) {
            tree_.nodes.emplace_back(make_leaf(rows));
            return id;
        }
        const Split split = best_split(rows);
        if (split.feature < 0) {
            tree_.nodes.emplace_back(make_leaf(rows));
            return id;
        }
        tree_.nodes.emplace_back(InternalNode{split.feature, split.threshold, -1, -1});
        std::vector<Index> left_rows, right_rows;
        for (Index r : rows) (data_.X(r, split.feature) > split.threshold ? right_rows : left_rows).push_back(r);
        const NodeId left = grow(left_rows, depth + 1);
        const NodeId right = grow(right_rows, depth + 1);
        auto& node = std::get<InternalNode>(tree_.nodes[id]);
        node.left = left;
        node.right = right;
        return id;
    }

    const Dataset& data_;
    const ForestParams& params_;
    int mtry_;
    Rng& rng_;
    DecisionTree tree_;
};

}  // namespace

TreeEnsemble train_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed) {
    data.validate();
    if (params.n_trees < 1) throw Error("n_trees must be positive");
    if (params.min_leaf < 1) throw Error("min_leaf must be positive");
    const int D = static_cast<int>(data.cols());
    int mtry = params.feature_subsample;
    if (mtry <= 0) {
        mtry = data.task == Task::classification ? static_cast<int>(std::floor(std::sqrt(static_cast<double>(D))))
                                                 : D / 3;
    }
    mtry = std::clamp(mtry, 1, D);

    TreeEnsemble forest;
    forest.task = data.task;
    forest.n_classes = data.task == Task::classification ? data.n_classes : 0;
    forest.n_features = D;
    const Index N = data.rows();
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<Index> rows(N);
        if (params.bootstrap) {
            for (auto& r : rows) r = static_cast<Index>(rng.below(static_cast<std::uint64_t>(N)));
        } else {
            std::iota(rows.begin(), rows.end(), Index{0});
        }
        TreeBuilder builder(data, params, mtry, rng);
        forest.trees.push_back({1.0 / params.n_trees, builder.build(std::move(rows))});
    }
    return forest;
}

}  // namespace defrag
