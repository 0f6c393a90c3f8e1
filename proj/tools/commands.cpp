#include "commands.hpp"

#include "defrag/model_io.hpp"
#include "defrag/plot.hpp"
#include "defrag/rng.hpp"

#include <fstream>

namespace defrag::cli {

using nlohmann::json;

TargetMode parse_target_mode(const std::string& name) {
    if (name == "ensemble") return TargetMode::ensemble;
    if (name == "label") return TargetMode::label;
    throw Error("unknown target mode '" + name + "' (expected ensemble or label)");
}

Method parse_method(const std::string& name) {
    if (name == "fab") return Method::fab;
    if (name == "em") return Method::em;
    throw Error("unknown method '" + name + "' (expected fab or em)");
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) { return fs::path(prefix.string() + suffix); }

Dataset load_for(const fs::path& path, CsvOptions csv, const TreeEnsemble& ensemble) {
    csv.task = ensemble.task;
    Dataset data = load_csv(path, csv);
    if (data.cols() != ensemble.n_features) {
        throw Error(path.string() + " has " + std::to_string(data.cols()) + " features but the ensemble expects " +
                    std::to_string(ensemble.n_features));
    }
    if (data.task == Task::classification) data.n_classes = std::max(data.n_classes, ensemble.n_classes);
    data.validate();
    return data;
}

}  // namespace

BinarizedDataset<double> prepare_targets(const Dataset& data, const StatementTable& table, TargetMode target,
                                         const TreeEnsemble* ensemble) {
    if (target == TargetMode::label) return binarize_dataset(data, table);
    if (ensemble == nullptr) throw Error("ensemble targets need an ensemble");
    if (ensemble->task != data.task) throw Error("task mismatch between ensemble and data");
    return binarize_dataset(data, table, ensemble_predict(*ensemble, data.X));
}

SynthOutput cmd_synth(const SynthOptions& options) {
    const auto gen = [&](std::uint64_t seed) {
        if (options.name == "synthetic1") return gen_synthetic1(options.n, options.noise, seed);
        if (options.name == "synthetic2") return gen_synthetic2(options.n, options.noise, seed);
        throw Error("unknown generator '" + options.name + "' (expected synthetic1 or synthetic2)");
    };
    SynthOutput out{with_suffix(options.out, "_train.csv"), with_suffix(options.out, "_test.csv")};
    save_csv(gen(derive_seed(options.seed, 0)), out.train);
    save_csv(gen(derive_seed(options.seed, 1)), out.test);
    return out;
}

TreeEnsemble cmd_train_forest(const TrainForestOptions& options) {
    const Dataset data = load_csv(options.data, options.csv);
    auto forest = train_forest(data, options.forest, options.seed);
    save_ensemble(forest, options.out);
    return forest;
}

SimplifyOutput cmd_simplify(const SimplifyOptions& options) {
    const auto start = Clock::now();
    const TreeEnsemble ensemble = load_ensemble(options.ensemble);
    const Dataset data = load_for(options.data, options.csv, ensemble);
    const StatementTable table = collect_statements(ensemble, options.deduplicate);
    if (table.empty()) throw Error("the ensemble has no internal nodes; nothing to simplify");
    const auto train = prepare_targets(data, table, options.target, &ensemble);
    const auto labelled = binarize_dataset(data, table);

    SimplifyOutput out;
    json report;
    report["method"] = options.method == Method::fab ? "fab" : "em";
    report["target"] = options.target == TargetMode::ensemble ? "ensemble" : "label";
    report["n"] = data.rows();
    report["L"] = table.size();
    report["L_raw"] = table.raw_count;
    report["empirical_regions"] = count_empirical_regions(train);

    if (options.method == Method::fab) {
        const auto outcome = fit_with_restarts(train, options.fab);
        out.model = outcome.best.model;
        report["omega"] = outcome.best.omega;
        report["kmax"] = options.fab.k_max;
        report["delta"] = options.fab.delta;
        report["seed"] = options.fab.seed;
        report["best_restart"] = outcome.best_restart;
        json runs = json::array();
        for (const auto& r : outcome.reports) {
            runs.push_back({{"restart", r.restart}, {"seed", r.seed}, {"K", r.regions}, {"train_error", r.train_error},
                            {"bound", r.bound}, {"iterations", r.iterations}, {"converged", r.converged},
                            {"seconds", r.seconds}});
        }
        report["restarts"] = std::move(runs);
    } else {
        EmOptions em;
        em.tol = options.fab.outer_tol;
        em.max_iter = options.fab.outer_max_iter;
        const auto sweep = em_sweep<double>(train, nullptr, {options.k}, options.fab.restarts, options.fab.seed, em, options.fab.threads);
        out.model = sweep.entries.front().best.model;
        report["seed"] = options.fab.seed;
        report["best_restart"] = sweep.entries.front().best_restart;
        report["restarts"] = options.fab.restarts;
    }

    out.rules = model_to_rules(out.model, options.tau);
    report["K"] = out.model.regions();
    report["train_error"] = mean_model_error(train, out.model);
    report["train_error_label"] = mean_model_error(labelled, out.model);
    report["tau"] = options.tau;
    if (!data.class_names.empty()) report["labels"] = data.class_names;
    report["wall_seconds"] = seconds_since(start);
    out.report = report;

    save_model(out.model, with_suffix(options.out, ".model.json"));
    save_rules(out.rules, with_suffix(options.out, ".rules.json"));
    write_text(with_suffix(options.out, ".rules.txt"), format_rules(out.rules, RuleStyle::text, data.feature_names));
    write_text(with_suffix(options.out, ".report.json"), report.dump(2) + "\n");
    return out;
}

void cmd_predict(const PredictOptions& options) {
    const Model model = load_model(options.model);
    CsvOptions csv = options.csv;
    csv.task = model.task;
    const Dataset data = load_csv(options.data, csv);
    const Eigen::MatrixXd bits = binarize_rows(data.X, model.table);
    const auto pred = predict_batch(bits, model);
    std::string text = "region,y\n";
    for (Index n = 0; n < bits.rows(); ++n) text += std::to_string(pred.region(n)) + "," + format_double(pred.value(n)) + "\n";
    write_text(options.out, text);
}

json cmd_evaluate(const EvaluateOptions& options) {
    const Model model = load_model(options.model);
    CsvOptions csv = options.csv;
    csv.task = model.task;
    Dataset data = load_csv(options.data, csv);
    if (model.task == Task::classification) data.n_classes = std::max(data.n_classes, model.n_classes);
    data.validate();

    std::optional<TreeEnsemble> ensemble;
    if (options.target == TargetMode::ensemble) {
        if (options.ensemble.empty()) throw Error("--target ensemble needs --ensemble");
        ensemble = load_ensemble(options.ensemble);
        if (ensemble->task != model.task) throw Error("task mismatch between ensemble and model");
    }
    const auto scored = prepare_targets(data, model.table, options.target, ensemble ? &*ensemble : nullptr);
    const RuleSet rules = model_to_rules(model, options.tau);

    json report;
    report["n"] = data.rows();
    report["error"] = mean_model_error(scored, model);
    report["overlap"] = overlap_metric(rules, data.X);
    report["per_rule_coverage"] = rule_coverage(rules, data.X);
    if (options.out) write_text(*options.out, report.dump(2) + "\n");
    return report;
}

CompareReport cmd_compare(const CompareOptions& options) {
    if (options.k_min < 1 || options.k_max < options.k_min) throw Error("invalid K range");
    const TreeEnsemble ensemble = load_ensemble(options.ensemble);
    const Dataset train_data = load_for(options.train, options.csv, ensemble);
    const Dataset test_data = load_for(options.test, options.csv, ensemble);
    const StatementTable table = collect_statements(ensemble, options.deduplicate);
    if (table.empty()) throw Error("the ensemble has no internal nodes; nothing to compare");
    const auto train = prepare_targets(train_data, table, options.target, &ensemble);
    // Test error is always measured against the recorded labels.
    const auto test = binarize_dataset(test_data, table);

    std::vector<Index> k_range;
    for (Index k = options.k_min; k <= options.k_max; ++k) k_range.push_back(k);
    FabConfig fab = options.fab;
    fab.k_max = options.k_max;
    auto report = compare_fab_em(train, test, fab, k_range);
    write_text(options.out, report.to_csv());
    return report;
}

void cmd_plot2d(const PlotOptions& options) {
    if (options.model.has_value() == options.ensemble.has_value()) throw Error("plot2d needs exactly one of --model or --ensemble");
    CsvOptions csv = options.csv;
    if (options.model) {
        const Model model = load_model(*options.model);
        csv.task = model.task;
        const Dataset data = load_csv(options.data, csv);
        write_text(options.out, plot_rules_svg(data, model_to_rules(model, options.tau), options.domain));
    } else {
        const TreeEnsemble ensemble = load_ensemble(*options.ensemble);
        csv.task = ensemble.task;
        const Dataset data = load_csv(options.data, csv);
        write_text(options.out, plot_ensemble_svg(data, ensemble, options.trees, options.domain));
    }
}

}  // namespace defrag::cli
