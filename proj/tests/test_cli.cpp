#include "commands.hpp"

#include "defrag/model_io.hpp"

#include <doctest.h>

#include <fstream>
#include <regex>
#include <sstream>

using namespace defrag;
using namespace defrag::cli;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Small Synthetic1 workspace shared by the tests below.
struct Workspace {
    fs::path dir = fs::temp_directory_path() / "defrag_test_cli";
    fs::path train, test, forest;

    Workspace() {
        fs::create_directories(dir);
        SynthOptions synth;
        synth.n = 400;
        synth.seed = 3;
        synth.out = dir / "s1";
        const auto files = cmd_synth(synth);
        train = files.train;
        test = files.test;
        TrainForestOptions tf;
        tf.data = train;
        tf.csv.task = Task::classification;
        tf.forest.n_trees = 10;
        tf.out = forest = dir / "forest.json";
        cmd_train_forest(tf);
    }
};

const Workspace& workspace() {
    static const Workspace w;
    return w;
}

SimplifyOptions simplify_options(const std::string& name) {
    SimplifyOptions o;
    o.ensemble = workspace().forest;
    o.data = workspace().train;
    o.fab.restarts = 3;
    o.out = workspace().dir / name;
    return o;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes reproducible train and test files") {
    const auto& w = workspace();
    CsvOptions csv;
    csv.task = Task::classification;
    const Dataset train = load_csv(w.train, csv);
    const Dataset test = load_csv(w.test, csv);
    CHECK(train.rows() == 400);
    CHECK(test.rows() == 400);
    CHECK(train.X == gen_synthetic1(400, 0.1, derive_seed(3, 0)).X);
    CHECK(test.y == gen_synthetic1(400, 0.1, derive_seed(3, 1)).y);

    SynthOptions again;
    again.n = 400;
    again.seed = 3;
    again.out = w.dir / "again";
    const auto files = cmd_synth(again);
    CHECK(slurp(files.train) == slurp(w.train));

    SynthOptions bad = again;
    bad.name = "synthetic9";
    CHECK_THROWS_AS(cmd_synth(bad), Error);
}

TEST_CASE("simplify then evaluate reproduces the training error") {
    const auto options = simplify_options("fab");
    const auto out = cmd_simplify(options);
    const auto report = nlohmann::json::parse(slurp(workspace().dir / "fab.report.json"));
    CHECK(report["K"].get<Index>() == out.model.regions());
    CHECK(report["K"].get<std::size_t>() == out.rules.rules.size());
    CHECK(report["restarts"].size() == 3);
    CHECK(report["kmax"] == 10);
    CHECK(load_rules(workspace().dir / "fab.rules.json") == out.rules);
    CHECK(model_to_json_text(load_model(workspace().dir / "fab.model.json")) == model_to_json_text(out.model));

    EvaluateOptions ev;
    ev.model = workspace().dir / "fab.model.json";
    ev.data = workspace().train;
    ev.target = TargetMode::ensemble;
    ev.ensemble = workspace().forest;
    const auto mimic = cmd_evaluate(ev);
    CHECK(mimic["error"].get<double>() == report["train_error"].get<double>());
    ev.target = TargetMode::label;
    const auto label = cmd_evaluate(ev);
    CHECK(label["error"].get<double>() == report["train_error_label"].get<double>());
    CHECK(label["per_rule_coverage"].size() == out.rules.rules.size());
    CHECK(label.contains("overlap"));
    CHECK(label["n"] == 400);

    // Cross-check against the library on the test file.
    ev.data = workspace().test;
    CsvOptions csv;
    csv.task = Task::classification;
    const Dataset test = load_csv(workspace().test, csv);
    const auto bd = binarize_dataset(test, out.model.table);
    CHECK(cmd_evaluate(ev)["error"].get<double>() == mean_model_error(bd, out.model));

    // Deterministic given flags and seed.
    CHECK(model_to_json_text(cmd_simplify(options).model) == model_to_json_text(out.model));
}

TEST_CASE("simplify dispatches to EM") {
    auto options = simplify_options("em");
    options.method = Method::em;
    options.k = 3;
    const auto out = cmd_simplify(options);
    CHECK(out.model.regions() == 3);
    CHECK(out.report["method"] == "em");
}

TEST_CASE("evaluate rejects a model and ensemble of different tasks") {
    auto options = simplify_options("mismatch");
    TreeEnsemble reg;
    reg.task = Task::regression;
    reg.n_features = 2;
    reg.trees.push_back({1.0, DecisionTree{{InternalNode{0, 0.5, 1, 2}, Leaf{{0.0}}, Leaf{{1.0}}}, 0}});
    save_ensemble(reg, workspace().dir / "reg.json");
    options.ensemble = workspace().dir / "reg.json";
    // The data takes the ensemble's task, so this fits a regression model.
    CHECK_NOTHROW(cmd_simplify(options));
    EvaluateOptions ev;
    ev.model = workspace().dir / "mismatch.model.json";
    ev.data = workspace().train;
    ev.target = TargetMode::ensemble;
    ev.ensemble = workspace().forest;
    CHECK_THROWS_AS(cmd_evaluate(ev), Error);
}

TEST_CASE("predict writes one row per input") {
    cmd_simplify(simplify_options("pred"));
    PredictOptions p;
    p.model = workspace().dir / "pred.model.json";
    p.data = workspace().test;
    p.out = workspace().dir / "pred.csv";
    cmd_predict(p);
    std::istringstream lines(slurp(p.out));
    std::string line;
    std::getline(lines, line);
    CHECK(line == "region,y");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 400);
}

TEST_CASE("compare report shape") {
    CompareOptions c;
    c.ensemble = workspace().forest;
    c.train = workspace().train;
    c.test = workspace().test;
    c.fab.restarts = 2;
    c.k_min = 1;
    c.k_max = 3;
    c.out = workspace().dir / "compare.csv";
    const auto report = cmd_compare(c);
    CHECK(report.rows.size() == 4);
    CHECK(report.rows[0].method == "FAB");
    for (const auto& r : report.rows) CHECK(r.wall_seconds > 0);
    std::istringstream lines(slurp(c.out));
    std::string header;
    std::getline(lines, header);
    CHECK(header == "method,K,train_error,test_error,wall_seconds,restarts,seed");
    int rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == 4);
    CHECK(report.em_total_seconds() > 0);
    c.k_min = 4;
    CHECK_THROWS_AS(cmd_compare(c), Error);
}

TEST_CASE("plot2d draws one rectangle per rule at the rule's clipped interval") {
    const auto out = cmd_simplify(simplify_options("plot"));
    PlotOptions p;
    p.data = workspace().train;
    p.model = workspace().dir / "plot.model.json";
    p.out = workspace().dir / "plot.svg";
    cmd_plot2d(p);
    const std::string svg = slurp(p.out);
    CHECK(svg.rfind("<?xml", 0) == 0);
    std::vector<Box> boxes;
    const std::regex rect(R"re(<rect class="rule"[^>]*data-x0="([^"]+)" data-x1="([^"]+)" data-y0="([^"]+)" data-y1="([^"]+)")re");
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it) {
        boxes.push_back({std::stod((*it)[1]), std::stod((*it)[2]), std::stod((*it)[3]), std::stod((*it)[4])});
    }
    std::size_t expected = 0;
    for (const auto& rule : out.rules.rules) {
        if (!rule_box(rule, Box{}).has_value()) continue;
        REQUIRE(expected < boxes.size());
        double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
        for (const auto& iv : rule.intervals) {
            auto& lo = iv.feature == 0 ? x0 : y0;
            auto& hi = iv.feature == 0 ? x1 : y1;
            lo = std::max(lo, iv.lower);
            hi = std::min(hi, iv.upper);
        }
        CHECK(boxes[expected].x0 == x0);
        CHECK(boxes[expected].x1 == x1);
        CHECK(boxes[expected].y0 == y0);
        CHECK(boxes[expected].y1 == y1);
        ++expected;
    }
    CHECK(boxes.size() == expected);

    PlotOptions cells = p;
    cells.model.reset();
    cells.ensemble = workspace().forest;
    cells.out = workspace().dir / "cells.svg";
    CHECK_NOTHROW(cmd_plot2d(cells));
    CHECK(slurp(cells.out).find("class=\"cell\"") != std::string::npos);

    PlotOptions both = p;
    both.ensemble = workspace().forest;
    CHECK_THROWS_AS(cmd_plot2d(both), Error);
}

TEST_CASE("plot2d needs two features") {
    Dataset d;
    d.task = Task::classification;
    d.n_classes = 2;
    d.X = Eigen::MatrixXd::Random(10, 3);
    d.y = Eigen::VectorXd::Zero(10);
    d.y(0) = 1;
    save_csv(d, workspace().dir / "three.csv");
    PlotOptions p;
    p.data = workspace().dir / "three.csv";
    p.ensemble = workspace().forest;
    CHECK_THROWS_AS(cmd_plot2d(p), Error);
}

}  // TEST_SUITE
