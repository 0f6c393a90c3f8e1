// defrag: simplify decision-tree ensembles into a few interpretable rules.

#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace defrag;
using namespace defrag::cli;

namespace {

struct CsvFlags {
    bool no_header = false;
    std::string target_column;

    void add(CLI::App* cmd) {
        cmd->add_flag("--no-header", no_header, "CSV files have no header row");
        cmd->add_option("--target-column", target_column, "Target column by name or 0-based index (default: last)");
    }
    CsvOptions options() const {
        CsvOptions csv;
        csv.has_header = !no_header;
        csv.target_column = target_column;
        return csv;
    }
};

void add_fab_flags(CLI::App* cmd, FabConfig& fab) {
    cmd->add_option("--kmax", fab.k_max, "Initial (maximum) number of regions")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--restarts", fab.restarts, "Random initializations")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--delta", fab.delta, "Region truncation threshold on mean responsibility")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", fab.seed, "Random seed")->capture_default_str();
    cmd->add_option("--inner-tol", fab.inner_tol, "E-step fixed-point tolerance")->capture_default_str();
    cmd->add_option("--inner-max-iter", fab.inner_max_iter, "E-step iteration cap")->capture_default_str();
    cmd->add_option("--tol", fab.outer_tol, "Relative bound change for convergence")->capture_default_str();
    cmd->add_option("--max-iter", fab.outer_max_iter, "Outer iteration cap")->capture_default_str();
    cmd->add_flag("--simplex-dof", fab.simplex_dof, "Count C-1 output parameters per classification region");
    cmd->add_option("--threads", fab.threads, "Restart workers (0 = all cores)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simplify tree ensembles into interpretable rules"};
    app.require_subcommand(1);

    // synth
    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic train/test CSV files");
    synth_cmd->add_option("--name", synth.name, "synthetic1 or synthetic2")->capture_default_str();
    synth_cmd->add_option("-n,--n", synth.n, "Rows per file")->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--noise", synth.noise, "Label flip probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Output prefix (<out>_train.csv, <out>_test.csv)")->capture_default_str();

    // train-forest
    TrainForestOptions forest;
    CsvFlags forest_csv;
    std::string forest_task = "classification";
    auto* forest_cmd = app.add_subcommand("train-forest", "Train a bagged CART forest");
    forest_cmd->add_option("--data", forest.data, "Training CSV")->required();
    forest_cmd->add_option("--task", forest_task, "classification or regression")->capture_default_str();
    forest_csv.add(forest_cmd);
    forest_cmd->add_option("--trees", forest.forest.n_trees, "Number of trees")->capture_default_str();
    forest_cmd->add_option("--max-depth", forest.forest.max_depth, "Depth limit (negative: unlimited)")->capture_default_str();
    forest_cmd->add_option("--min-leaf", forest.forest.min_leaf, "Minimum samples per child")->capture_default_str();
    forest_cmd->add_option("--mtry", forest.forest.feature_subsample, "Features tried per split (0: default)")->capture_default_str();
    bool no_bootstrap = false;
    forest_cmd->add_flag("--no-bootstrap", no_bootstrap, "Grow every tree on the full data");
    forest_cmd->add_option("--seed", forest.seed, "Random seed")->capture_default_str();
    forest_cmd->add_option("--out", forest.out, "Ensemble JSON output")->capture_default_str();

    // simplify
    SimplifyOptions simplify;
    CsvFlags simplify_csv;
    std::string simplify_target = "ensemble", simplify_method = "fab";
    bool simplify_no_dedup = false;
    auto* simplify_cmd = app.add_subcommand("simplify", "Fit the simplified region model and extract rules");
    simplify_cmd->add_option("--ensemble", simplify.ensemble, "Ensemble JSON")->required();
    simplify_cmd->add_option("--data", simplify.data, "Training CSV")->required();
    simplify_csv.add(simplify_cmd);
    add_fab_flags(simplify_cmd, simplify.fab);
    simplify_cmd->add_option("--tau", simplify.tau, "Rounding threshold for rule extraction")->capture_default_str();
    simplify_cmd->add_option("--target", simplify_target, "Fit targets: ensemble (mimic) or label")->capture_default_str();
    simplify_cmd->add_option("--method", simplify_method, "fab or em")->capture_default_str();
    simplify_cmd->add_option("--k", simplify.k, "Number of regions for --method em")->capture_default_str();
    simplify_cmd->add_flag("--no-dedup", simplify_no_dedup, "Keep duplicated statements");
    simplify_cmd->add_option("--out", simplify.out, "Output prefix")->capture_default_str();

    // predict
    PredictOptions predict;
    CsvFlags predict_csv;
    bool predict_no_target = false;
    auto* predict_cmd = app.add_subcommand("predict", "Predict with a simplified model");
    predict_cmd->add_option("--model", predict.model, "Model JSON")->required();
    predict_cmd->add_option("--data", predict.data, "Input CSV")->required();
    predict_csv.add(predict_cmd);
    predict_cmd->add_flag("--no-target", predict_no_target, "Every CSV column is a feature");
    predict_cmd->add_option("--out", predict.out, "Predictions CSV")->capture_default_str();

    // evaluate
    EvaluateOptions evaluate;
    CsvFlags evaluate_csv;
    std::string evaluate_target = "label";
    std::string evaluate_out;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a simplified model on labelled data");
    evaluate_cmd->add_option("--model", evaluate.model, "Model JSON")->required();
    evaluate_cmd->add_option("--data", evaluate.data, "Labelled CSV")->required();
    evaluate_csv.add(evaluate_cmd);
    evaluate_cmd->add_option("--target", evaluate_target, "Score against label or ensemble outputs")->capture_default_str();
    evaluate_cmd->add_option("--ensemble", evaluate.ensemble, "Ensemble JSON (for --target ensemble)");
    evaluate_cmd->add_option("--tau", evaluate.tau, "Rounding threshold for rule extraction")->capture_default_str();
    evaluate_cmd->add_option("--out", evaluate_out, "Also write the report to this file");

    // compare
    CompareOptions compare;
    CsvFlags compare_csv;
    std::string compare_target = "ensemble";
    bool compare_no_dedup = false;
    auto* compare_cmd = app.add_subcommand("compare", "FAB inference against an EM sweep over K");
    compare_cmd->add_option("--ensemble", compare.ensemble, "Ensemble JSON")->required();
    compare_cmd->add_option("--train", compare.train, "Training CSV")->required();
    compare_cmd->add_option("--test", compare.test, "Test CSV")->required();
    compare_csv.add(compare_cmd);
    add_fab_flags(compare_cmd, compare.fab);
    compare_cmd->add_option("--kmin", compare.k_min, "Smallest K of the EM sweep")->capture_default_str();
    compare_cmd->add_option("--target", compare_target, "Fit targets: ensemble or label")->capture_default_str();
    compare_cmd->add_flag("--no-dedup", compare_no_dedup, "Keep duplicated statements");
    compare_cmd->add_option("--out", compare.out, "CSV report")->capture_default_str();

    // plot2d
    PlotOptions plot;
    CsvFlags plot_csv;
    std::string plot_model, plot_ensemble;
    auto* plot_cmd = app.add_subcommand("plot2d", "Draw rules or ensemble cells over 2-D data as SVG");
    plot_cmd->add_option("--data", plot.data, "CSV with two features")->required();
    plot_csv.add(plot_cmd);
    plot_cmd->add_option("--model", plot_model, "Model JSON");
    plot_cmd->add_option("--ensemble", plot_ensemble, "Ensemble JSON");
    plot_cmd->add_option("--trees", plot.trees, "Trees drawn for --ensemble")->capture_default_str();
    plot_cmd->add_option("--tau", plot.tau, "Rounding threshold for rule extraction")->capture_default_str();
    plot_cmd->add_option("--out", plot.out, "SVG output")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            const auto out = cmd_synth(synth);
            std::cout << out.train.string() << '\n' << out.test.string() << '\n';
        } else if (*forest_cmd) {
            forest.csv = forest_csv.options();
            forest.csv.task = parse_task(forest_task);
            forest.forest.bootstrap = !no_bootstrap;
            const auto e = cmd_train_forest(forest);
            std::cout << "trained " << e.trees.size() << " trees -> " << forest.out.string() << '\n';
        } else if (*simplify_cmd) {
            simplify.csv = simplify_csv.options();
            simplify.target = parse_target_mode(simplify_target);
            simplify.method = parse_method(simplify_method);
            simplify.deduplicate = !simplify_no_dedup;
            const auto out = cmd_simplify(simplify);
            std::cout << format_rules(out.rules, RuleStyle::text);
            std::cout << "K = " << out.model.regions() << ", train error = " << out.report["train_error"].get<double>()
                      << '\n';
        } else if (*predict_cmd) {
            predict.csv = predict_csv.options();
            predict.csv.has_target = !predict_no_target;
            cmd_predict(predict);
        } else if (*evaluate_cmd) {
            evaluate.csv = evaluate_csv.options();
            evaluate.target = parse_target_mode(evaluate_target);
            if (!evaluate_out.empty()) evaluate.out = evaluate_out;
            std::cout << cmd_evaluate(evaluate).dump(2) << '\n';
        } else if (*compare_cmd) {
            compare.csv = compare_csv.options();
            compare.target = parse_target_mode(compare_target);
            compare.deduplicate = !compare_no_dedup;
            compare.k_max = compare.fab.k_max;
            std::cout << cmd_compare(compare).to_csv();
        } else if (*plot_cmd) {
            plot.csv = plot_csv.options();
            if (!plot_model.empty()) plot.model = plot_model;
            if (!plot_ensemble.empty()) plot.ensemble = plot_ensemble;
            cmd_plot2d(plot);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
