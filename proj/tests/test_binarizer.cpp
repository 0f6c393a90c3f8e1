#include "oracles.hpp"

#include "defrag/binarizer.hpp"
#include "defrag/data.hpp"

#include <doctest.h>

#include <array>

using namespace defrag;

namespace {

// Three thresholds on x1 and four on x2, as in the two-dimensional example
// grid: b1 < b2 < b3 on x1, b4 < ... < b7 on x2.
constexpr std::array<double, 3> bx{0.2, 0.5, 0.8};
constexpr std::array<double, 4> by{0.1, 0.3, 0.6, 0.9};

TreeEnsemble grid_ensemble() {
    // One chain tree per feature: enough to carry all seven statements.
    TreeEnsemble e;
    e.task = Task::regression;
    e.n_features = 2;
    auto chain = [](int feature, std::span<const double> thresholds) {
        DecisionTree t;
        for (std::size_t i = 0; i < thresholds.size(); ++i) {
            const auto id = NodeId(2 * i);
            t.nodes.emplace_back(InternalNode{feature, thresholds[i], id + 1, id + 2});
            t.nodes.emplace_back(Leaf{{double(i)}});
        }
        t.nodes.emplace_back(Leaf{{9.0}});
        return t;
    };
    e.trees.push_back({0.5, chain(1, by)});
    e.trees.push_back({0.5, chain(0, bx)});
    return e;
}

std::string trits(const std::vector<Trit>& v) {
    std::string s;
    for (Trit t : v) s.push_back(char(t));
    return s;
}

std::vector<PathStatement> box(double x_lo, double x_hi, double y_lo, double y_hi) {
    return {{0, x_lo, Side::greater}, {0, x_hi, Side::less_equal}, {1, y_lo, Side::greater}, {1, y_hi, Side::less_equal}};
}

}  // namespace

TEST_SUITE("binarizer") {

TEST_CASE("collect_statements") {
    TreeEnsemble one;
    one.n_features = 1;
    one.trees.push_back({1.0, DecisionTree{{InternalNode{0, 0.5, 1, 2}, Leaf{{0.0}}, Leaf{{1.0}}}, 0}});
    const auto t1 = collect_statements(one);
    REQUIRE(t1.size() == 1);
    CHECK(t1[0] == Statement{0, 0.5});

    TreeEnsemble two;
    two.n_features = 2;
    for (int i = 0; i < 2; ++i) two.trees.push_back({0.5, DecisionTree{{InternalNode{1, 3.0, 1, 2}, Leaf{{0.0}}, Leaf{{1.0}}}, 0}});
    CHECK(collect_statements(two).size() == 1);
    CHECK(collect_statements(two).raw_count == 2);
    CHECK(collect_statements(two, false).size() == 2);

    const auto grid = collect_statements(grid_ensemble());
    REQUIRE(grid.size() == 7);
    for (std::size_t i = 0; i < 3; ++i) CHECK(grid[i] == Statement{0, bx[i]});
    for (std::size_t i = 0; i < 4; ++i) CHECK(grid[3 + i] == Statement{1, by[i]});

    TreeEnsemble leaf_only;
    leaf_only.n_features = 1;
    leaf_only.trees.push_back({1.0, DecisionTree{{Leaf{{1.0}}}, 0}});
    CHECK(collect_statements(leaf_only).empty());
}

TEST_CASE("collect_statements depends only on the node multiset") {
    auto e = gen::random_ensemble(21, 12, 4, 3, Task::regression);
    const auto table = collect_statements(e);
    std::reverse(e.trees.begin(), e.trees.end());
    CHECK(collect_statements(e) == table);
    CHECK(std::is_sorted(table.statements.begin(), table.statements.end()));
    CHECK(std::adjacent_find(table.statements.begin(), table.statements.end()) == table.statements.end());
}

TEST_CASE("binarize") {
    const auto table = collect_statements(grid_ensemble());
    // Lower-left sub-cell of b1 < x1 <= b3, b4 < x2 <= b6.
    const Eigen::VectorXd s = binarize(std::array{0.3, 0.2}, table);
    CHECK(s == (Eigen::VectorXd(7) << 1, 0, 0, 1, 0, 0, 0).finished());
    CHECK(binarize(std::array{-1.0, -1.0}, table).sum() == 0);
    CHECK(binarize(std::array{2.0, 2.0}, table).sum() == 7);
    CHECK(binarize(std::array{0.2, 0.1}, table).sum() == 0);  // strict >
}

TEST_CASE("region_to_eta") {
    const auto table = collect_statements(grid_ensemble());
    CHECK(trits(region_to_eta(box(bx[0], bx[1], by[0], by[1]), table)) == "1001000");
    CHECK(trits(region_to_eta(box(bx[0], bx[2], by[0], by[2]), table)) == "1*01*00");
    CHECK(trits(region_to_eta({}, table)) == "*******");
    CHECK_THROWS_AS(region_to_eta(box(bx[1], bx[0], by[0], by[1]), table), Error);
}

TEST_CASE("binarize matches region_to_eta on every leaf") {
    const auto e = gen::random_ensemble(31, 6, 4, 3, Task::regression);
    const auto table = collect_statements(e);
    Rng rng(8);
    for (const auto& wt : e.trees) {
        for (int i = 0; i < 300; ++i) {
            const std::array x{rng.uniform(), rng.uniform(), rng.uniform()};
            const auto eta = region_to_eta(leaf_region(wt.tree, wt.tree.apply_index(x)), table);
            const Eigen::VectorXd s = binarize(x, table);
            for (std::size_t l = 0; l < eta.size(); ++l) {
                if (eta[l] != Trit::free) CHECK(s(Index(l)) == (eta[l] == Trit::one ? 1.0 : 0.0));
            }
            // Strictness: the tree's own statements agree with routing.
            const auto expected = oracle::binarize({x.begin(), x.end()}, table);
            for (std::size_t l = 0; l < expected.size(); ++l) CHECK(s(Index(l)) == expected[l]);
        }
    }
}

TEST_CASE("count_distinct_rows") {
    Eigen::MatrixXd same = Eigen::MatrixXd::Ones(5, 3);
    CHECK(count_distinct_rows(same) == 1);
    Eigen::MatrixXd distinct(4, 2);
    distinct << 0, 0, 0, 1, 1, 0, 1, 1;
    CHECK(count_distinct_rows(distinct) == 4);
}

}  // TEST_SUITE
