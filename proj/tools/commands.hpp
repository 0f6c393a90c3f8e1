#pragma once

#include "defrag/compare.hpp"
#include "defrag/data.hpp"
#include "defrag/ensemble.hpp"
#include "defrag/plot.hpp"
#include "defrag/rules.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace defrag::cli {

namespace fs = std::filesystem;

enum class TargetMode { ensemble, label };
enum class Method { fab, em };

TargetMode parse_target_mode(const std::string& name);
Method parse_method(const std::string& name);

struct SynthOptions {
    std::string name = "synthetic1";
    Index n = 1000;
    double noise = 0.1;
    std::uint64_t seed = 0;
    fs::path out = "synthetic1";  // writes <out>_train.csv and <out>_test.csv
};

struct SynthOutput {
    fs::path train;
    fs::path test;
};

// Train rows use derive_seed(seed, 0), test rows derive_seed(seed, 1).
SynthOutput cmd_synth(const SynthOptions& options);

struct TrainForestOptions {
    fs::path data;
    CsvOptions csv;
    ForestParams forest;
    std::uint64_t seed = 0;
    fs::path out = "forest.json";
};

TreeEnsemble cmd_train_forest(const TrainForestOptions& options);

struct SimplifyOptions {
    fs::path ensemble;
    fs::path data;
    CsvOptions csv;  // task is taken from the ensemble
    FabConfig fab;
    Method method = Method::fab;
    Index k = 4;  // EM only
    double tau = 1e-3;
    TargetMode target = TargetMode::ensemble;
    bool deduplicate = true;
    fs::path out = "defrag";  // <out>.model.json, .rules.txt, .rules.json, .report.json
};

struct SimplifyOutput {
    Model model;
    RuleSet rules;
    nlohmann::json report;
};

SimplifyOutput cmd_simplify(const SimplifyOptions& options);

struct PredictOptions {
    fs::path model;
    fs::path data;
    CsvOptions csv;  // has_target=false reads every column as a feature
    fs::path out = "predictions.csv";
};

void cmd_predict(const PredictOptions& options);

struct EvaluateOptions {
    fs::path model;
    fs::path data;
    CsvOptions csv;
    TargetMode target = TargetMode::label;
    fs::path ensemble;  // required for TargetMode::ensemble
    double tau = 1e-3;
    std::optional<fs::path> out;
};

// {n, error, overlap, per_rule_coverage}
nlohmann::json cmd_evaluate(const EvaluateOptions& options);

struct CompareOptions {
    fs::path ensemble;
    fs::path train;
    fs::path test;
    CsvOptions csv;
    FabConfig fab;
    Index k_min = 1;
    Index k_max = 10;
    TargetMode target = TargetMode::ensemble;
    bool deduplicate = true;
    fs::path out = "compare.csv";
};

CompareReport cmd_compare(const CompareOptions& options);

struct PlotOptions {
    fs::path data;
    CsvOptions csv;
    std::optional<fs::path> model;
    std::optional<fs::path> ensemble;
    int trees = 5;
    double tau = 1e-3;
    Box domain{};
    fs::path out = "plot.svg";
};

void cmd_plot2d(const PlotOptions& options);

// Shared by simplify/evaluate/compare: the data the model is fitted or scored on.
BinarizedDataset<double> prepare_targets(const Dataset& data, const StatementTable& table, TargetMode target,
                                         const TreeEnsemble* ensemble);

}  // namespace defrag::cli
