#pragma once

// Independent reference computations and random instance generators. The
// oracles use plain loops, std::vector and probability-space products rather
// than the library's matrix code, so agreement is a real cross-check.

#include "defrag/fab.hpp"
#include "defrag/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

using defrag::Index;

inline double clip(double p) { return std::min(std::max(p, defrag::kProbFloor), 1.0 - defrag::kProbFloor); }
inline double floor_p(double p) { return std::max(p, defrag::kProbFloor); }

// prod_l eta^s (1 - eta)^(1 - s), evaluated directly (no logs).
inline double p_s(const std::vector<double>& s, const defrag::Model& m, Index k) {
    double p = 1.0;
    for (std::size_t l = 0; l < s.size(); ++l) {
        const double e = clip(m.eta(k, Index(l)));
        p *= s[l] > 0.5 ? e : 1.0 - e;
    }
    return p;
}

inline double log_p_y(double y, const defrag::Model& m, Index k) {
    if (m.task == defrag::Task::regression) {
        const double lambda = std::max(m.lambda(k), defrag::kPrecisionFloor);
        const double r = y - m.mu(k);
        return std::log(std::sqrt(lambda / (2 * std::numbers::pi)) * std::exp(-0.5 * lambda * r * r));
    }
    return std::log(floor_p(m.gamma(k, Index(y))));
}

inline double log_bernoulli_sum(const std::vector<double>& s, const defrag::Model& m, Index k) {
    double total = 0;
    for (std::size_t l = 0; l < s.size(); ++l) {
        const double e = clip(m.eta(k, Index(l)));
        total += s[l] * std::log(e) + (1 - s[l]) * std::log(1 - e);
    }
    return total;
}

inline std::vector<double> row(const Eigen::MatrixXd& M, Index n) {
    std::vector<double> out(std::size_t(M.cols()));
    for (Index j = 0; j < M.cols(); ++j) out[std::size_t(j)] = M(n, j);
    return out;
}

// Brute-force two-step MAP: enumerate p(s|k) alpha_k as plain products and
// keep the first one within the tie tolerance (a ratio here) of the maximum;
// then the same rule on gamma.
struct MapResult {
    Index region;
    double value;
};

inline Index first_near_max(const std::vector<double>& p) {
    const double best = *std::max_element(p.begin(), p.end());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] >= best * std::exp(-defrag::kTieTolerance)) return Index(i);
    }
    return 0;
}

inline MapResult brute_map(const std::vector<double>& s, const defrag::Model& m) {
    std::vector<double> joint;
    for (Index k = 0; k < m.regions(); ++k) joint.push_back(p_s(s, m, k) * floor_p(m.alpha(k)));
    const Index best = first_near_max(joint);
    if (m.task == defrag::Task::regression) return {best, m.mu(best)};
    std::vector<double> gamma;
    for (Index c = 0; c < m.n_classes; ++c) gamma.push_back(m.gamma(best, c));
    // gamma entries are probabilities; the tolerance is absolute there.
    const double top = *std::max_element(gamma.begin(), gamma.end());
    for (std::size_t c = 0; c < gamma.size(); ++c) {
        if (gamma[c] >= top - defrag::kTieTolerance) return {best, double(c)};
    }
    return {best, 0.0};
}

// log sum_k f_k per row, summed; f evaluated term by term.
inline double log_likelihood(const defrag::BinarizedDataset<double>& d, const defrag::Model& m) {
    double total = 0;
    for (Index n = 0; n < d.rows(); ++n) {
        const auto s = row(d.bits, n);
        std::vector<double> lf;
        for (Index k = 0; k < m.regions(); ++k) {
            lf.push_back(log_p_y(d.target(n), m, k) + log_bernoulli_sum(s, m, k) + std::log(floor_p(m.alpha(k))));
        }
        const double mx = *std::max_element(lf.begin(), lf.end());
        double acc = 0;
        for (double v : lf) acc += std::exp(v - mx);
        total += mx + std::log(acc);
    }
    return total;
}

// FAB bound summed term by term; omega = 0 gives the EM bound.
inline double fab_bound(const defrag::BinarizedDataset<double>& d, const defrag::Model& m, const Eigen::MatrixXd& beta,
                        double omega) {
    double expected = 0, entropy = 0, penalty = 0;
    for (Index n = 0; n < d.rows(); ++n) {
        const auto s = row(d.bits, n);
        for (Index k = 0; k < m.regions(); ++k) {
            const double b = beta(n, k);
            expected += b * log_p_y(d.target(n), m, k);
            expected += b * log_bernoulli_sum(s, m, k);
            expected += b * std::log(floor_p(m.alpha(k)));
            if (b > 0) entropy -= b * std::log(b);
        }
    }
    for (Index k = 0; k < m.regions(); ++k) {
        double mass = 0;
        for (Index n = 0; n < d.rows(); ++n) mass += beta(n, k);
        penalty += std::log(mass + 1);
    }
    return expected - omega * penalty + entropy;
}

// Weighted averages by direct summation (unclipped, unfloored).
struct MstepOracle {
    std::vector<double> alpha, mu, var;
    std::vector<std::vector<double>> eta, gamma;
};

inline MstepOracle mstep(const defrag::BinarizedDataset<double>& d, const Eigen::MatrixXd& beta) {
    MstepOracle o;
    const Index N = d.rows(), K = beta.cols(), L = d.statements();
    for (Index k = 0; k < K; ++k) {
        double mass = 0, wy = 0;
        std::vector<double> ws(std::size_t(L), 0.0), wc(std::size_t(std::max(d.n_classes, 0)), 0.0);
        for (Index n = 0; n < N; ++n) {
            mass += beta(n, k);
            wy += beta(n, k) * d.target(n);
            for (Index l = 0; l < L; ++l) ws[std::size_t(l)] += beta(n, k) * d.bits(n, l);
            if (d.task == defrag::Task::classification) wc[std::size_t(d.target(n))] += beta(n, k);
        }
        o.alpha.push_back(mass / double(N));
        for (auto& v : ws) v /= mass;
        o.eta.push_back(ws);
        if (d.task == defrag::Task::regression) {
            const double mu = wy / mass;
            double v = 0;
            for (Index n = 0; n < N; ++n) v += beta(n, k) * (d.target(n) - mu) * (d.target(n) - mu);
            o.mu.push_back(mu);
            o.var.push_back(v / mass);
        } else {
            for (auto& v : wc) v /= mass;
            o.gamma.push_back(wc);
        }
    }
    return o;
}

// Rule membership checked one rounded statement at a time, without interval
// tightening.
inline bool rule_holds(const defrag::Model& m, Index k, double tau, const std::vector<double>& x) {
    for (Index l = 0; l < m.statements(); ++l) {
        const auto& st = m.table[std::size_t(l)];
        const double e = m.eta(k, l);
        if (e >= 1 - tau && !(x[std::size_t(st.feature)] > st.threshold)) return false;
        if (e < 1 - tau && e <= tau && !(x[std::size_t(st.feature)] <= st.threshold)) return false;
    }
    return true;
}

inline std::vector<double> binarize(const std::vector<double>& x, const defrag::StatementTable& table) {
    std::vector<double> s;
    for (const auto& st : table.statements) s.push_back(x[std::size_t(st.feature)] > st.threshold ? 1.0 : 0.0);
    return s;
}

}  // namespace oracle

namespace gen {

using defrag::Index;
using defrag::Rng;

// Random tree of at most `depth` levels; thresholds on a coarse grid so
// duplicates across trees occur.
inline defrag::DecisionTree random_tree(Rng& rng, int depth, int n_features, defrag::Task task, int n_classes) {
    defrag::DecisionTree tree;
    auto grow = [&](auto&& self, int d) -> defrag::NodeId {
        const auto id = static_cast<defrag::NodeId>(tree.nodes.size());
        if (d == 0 || (d < depth && rng.uniform() < 0.25)) {
            defrag::Leaf leaf;
            if (task == defrag::Task::regression) {
                leaf.value = {rng.uniform() * 10 - 5};
            } else {
                double total = 0;
                for (int c = 0; c < n_classes; ++c) total += leaf.value.emplace_back(rng.exponential());
                for (auto& v : leaf.value) v /= total;
            }
            tree.nodes.emplace_back(leaf);
            return id;
        }
        defrag::InternalNode node;
        node.feature = int(rng.below(std::uint64_t(n_features)));
        node.threshold = double(rng.below(20)) / 20.0 + rng.uniform() * 1e-3;
        tree.nodes.emplace_back(node);
        const auto left = self(self, d - 1);
        const auto right = self(self, d - 1);
        auto& stored = std::get<defrag::InternalNode>(tree.nodes[std::size_t(id)]);
        stored.left = left;
        stored.right = right;
        return id;
    };
    tree.root = grow(grow, depth);
    return tree;
}

inline defrag::TreeEnsemble random_ensemble(std::uint64_t seed, int n_trees, int depth, int n_features,
                                            defrag::Task task, int n_classes = 2) {
    Rng rng(seed);
    defrag::TreeEnsemble e;
    e.task = task;
    e.n_features = n_features;
    e.n_classes = task == defrag::Task::classification ? n_classes : 0;
    for (int t = 0; t < n_trees; ++t) e.trees.push_back({rng.uniform() + 0.1, random_tree(rng, depth, n_features, task, n_classes)});
    return e;
}

inline defrag::StatementTable random_table(Rng& rng, Index L, int n_features) {
    defrag::StatementTable table;
    for (Index l = 0; l < L; ++l) table.statements.push_back({int(rng.below(std::uint64_t(n_features))), rng.uniform()});
    std::sort(table.statements.begin(), table.statements.end());
    table.raw_count = table.size();
    return table;
}

// Random model; `grid` snaps eta and alpha to tenths so exact ties appear.
inline defrag::Model random_model(Rng& rng, Index K, Index L, defrag::Task task, int n_classes = 3, bool grid = false) {
    defrag::Model m;
    m.task = task;
    m.n_classes = task == defrag::Task::classification ? n_classes : 0;
    m.table = random_table(rng, L, 3);
    m.eta.resize(K, L);
    for (Index k = 0; k < K; ++k) {
        for (Index l = 0; l < L; ++l) m.eta(k, l) = grid ? double(1 + rng.below(9)) / 10.0 : 0.01 + 0.98 * rng.uniform();
    }
    m.alpha.resize(K);
    for (Index k = 0; k < K; ++k) m.alpha(k) = grid ? double(1 + rng.below(3)) : rng.exponential();
    m.alpha /= m.alpha.sum();
    if (task == defrag::Task::regression) {
        m.mu.resize(K);
        m.lambda.resize(K);
        for (Index k = 0; k < K; ++k) {
            m.mu(k) = rng.uniform() * 4 - 2;
            m.lambda(k) = 0.5 + 2 * rng.uniform();
        }
    } else {
        m.gamma.resize(K, n_classes);
        for (Index k = 0; k < K; ++k) {
            for (int c = 0; c < n_classes; ++c) m.gamma(k, c) = grid ? double(1 + rng.below(3)) : rng.exponential();
            m.gamma.row(k) /= m.gamma.row(k).sum();
        }
    }
    return m;
}

// Sample N points from a model: region by alpha, bits by eta, target by phi.
inline defrag::BinarizedDataset<double> sample(Rng& rng, const defrag::Model& m, Index N) {
    defrag::BinarizedDataset<double> d;
    d.task = m.task;
    d.n_classes = m.n_classes;
    d.table = m.table;
    d.bits.resize(N, m.statements());
    d.target.resize(N);
    for (Index n = 0; n < N; ++n) {
        double u = rng.uniform();
        Index k = 0;
        while (k + 1 < m.regions() && u >= m.alpha(k)) u -= m.alpha(k++);
        for (Index l = 0; l < m.statements(); ++l) d.bits(n, l) = rng.bernoulli(m.eta(k, l)) ? 1.0 : 0.0;
        if (m.task == defrag::Task::regression) {
            // Box-Muller on two platform-independent uniforms.
            const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
            const double z = std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
            d.target(n) = m.mu(k) + z / std::sqrt(m.lambda(k));
        } else {
            double v = rng.uniform();
            Index c = 0;
            while (c + 1 < m.n_classes && v >= m.gamma(k, c)) v -= m.gamma(k, c++);
            d.target(n) = double(c);
        }
    }
    return d;
}

// The small random instances of the monotonicity suites: N <= 200, L <= 20,
// K <= 5, alternating regression and classification.
struct Instance {
    defrag::BinarizedDataset<double> data;
    Index K;
};

inline Instance small_instance(std::uint64_t seed) {
    Rng rng(defrag::derive_seed(seed, 7));
    const Index N = 20 + Index(rng.below(181));
    const Index L = 1 + Index(rng.below(20));
    const Index K = 1 + Index(rng.below(5));
    const auto task = seed % 2 == 0 ? defrag::Task::regression : defrag::Task::classification;
    const auto truth = random_model(rng, 1 + Index(rng.below(4)), L, task, 2 + int(rng.below(2)));
    return {sample(rng, truth, N), K};
}

}  // namespace gen
