#pragma once

// Factorized asymptotic Bayesian (FAB) inference for the region model.
//
// The FAB bound adds -omega * sum_k log(N_k + 1) to the EM bound, where N_k
// is the responsibility mass of region k. Its E-step has no closed form and
// is solved by a minorize-maximize fixed-point iteration; regions whose mass
// collapses below delta are removed, so K is selected during fitting.

#include "defrag/em.hpp"

#include <optional>

namespace defrag {

struct FabConfig {
    Index k_max = 10;
    double delta = 1e-3;      // truncation threshold on mean responsibility
    double inner_tol = 1e-6;  // max abs change of beta in the E-step
    int inner_max_iter = 100;
    double outer_tol = 1e-6;  // relative change of the FAB bound
    int outer_max_iter = 300;
    int restarts = 20;
    std::uint64_t seed = 0;
    // Count C - 1 instead of C output parameters per classification region.
    bool simplex_dof = false;
    bool truncation = true;
    std::optional<double> omega_override;
    int threads = 0;  // restart workers; 0 = hardware concurrency
};

// omega = (dim(phi)/K + L + 1) / 2 with dim(phi)/K = 2 (mean, precision) for
// regression and C (or C - 1) for classification.
inline double omega(Task task, int n_classes, Index statements, bool simplex_dof = false) {
    const double per_region = task == Task::regression ? 2.0 : double(simplex_dof ? n_classes - 1 : n_classes);
    return (per_region + double(statements) + 1.0) / 2.0;
}

template <typename Scalar>
double omega_for(const BinarizedDataset<Scalar>& data, const FabConfig& config) {
    if (config.omega_override) return *config.omega_override;
    return omega(data.task, data.n_classes, data.statements(), config.simplex_dof);
}

// One MM update: beta ∝ f exp(-omega / (sum_n psi + 1)).
template <typename Scalar>
Matrix<Scalar> fab_update(const Matrix<Scalar>& log_f, const Matrix<Scalar>& psi, Scalar omega_value) {
    const RowVector<Scalar> penalty = (omega_value / (psi.colwise().sum().array() + Scalar(1))).matrix();
    Matrix<Scalar> logits = log_f;
    logits.rowwise() -= penalty;
    return row_softmax(logits);
}

// E-step objective: sum beta log f - omega sum_k log(N_k + 1) + H(beta).
template <typename Scalar>
Scalar fab_estep_objective(const Matrix<Scalar>& log_f, const Matrix<Scalar>& resp, Scalar omega_value) {
    const Scalar penalty = (resp.colwise().sum().array() + Scalar(1)).log().sum();
    return (resp.array() * log_f.array()).sum() - omega_value * penalty + responsibility_entropy(resp);
}

template <typename Scalar>
struct EStepResult {
    Matrix<Scalar> resp;
    int iterations = 0;
    bool converged = false;
    std::vector<Scalar> objective;  // initial point, then after each update (when recorded)
};

// Iterates fab_update from `init` until beta moves less than inner_tol.
template <typename Scalar>
EStepResult<Scalar> fab_estep(const Matrix<Scalar>& log_f, const Matrix<Scalar>& init, Scalar omega_value,
                              double inner_tol, int inner_max_iter, bool record_objective = false) {
    EStepResult<Scalar> out;
    out.resp = init;
    if (record_objective) out.objective.push_back(fab_estep_objective(log_f, out.resp, omega_value));
    for (int it = 0; it < inner_max_iter; ++it) {
        Matrix<Scalar> next = fab_update(log_f, out.resp, omega_value);
        const Scalar change = (next - out.resp).cwiseAbs().maxCoeff();
        out.resp = std::move(next);
        out.iterations = it + 1;
        if (record_objective) out.objective.push_back(fab_estep_objective(log_f, out.resp, omega_value));
        if (change < Scalar(inner_tol)) {
            out.converged = true;
            break;
        }
    }
    return out;
}

template <typename Scalar>
EStepResult<Scalar> fab_estep(const BinarizedDataset<Scalar>& data, const SimplifiedModel<Scalar>& model,
                              const Matrix<Scalar>& init, Scalar omega_value, double inner_tol, int inner_max_iter,
                              bool record_objective = false) {
    return fab_estep(log_joint_matrix(data, model), init, omega_value, inner_tol, inner_max_iter, record_objective);
}

template <typename Scalar>
struct Truncation {
    Matrix<Scalar> resp;
    SimplifiedModel<Scalar> model;
    std::vector<Index> removed;
    Vector<Scalar> surviving_mass;  // mean responsibility of kept regions, before renormalization
};

// Drops regions whose mean responsibility is below delta (regions with zero
// mass always go). At least the heaviest region survives.
template <typename Scalar>
Truncation<Scalar> truncate(const Matrix<Scalar>& resp, const SimplifiedModel<Scalar>& model, double delta) {
    const Vector<Scalar> mean_mass = resp.colwise().mean().transpose();
    std::vector<Index> kept;
    Truncation<Scalar> out;
    for (Index k = 0; k < resp.cols(); ++k) {
        if (mean_mass(k) >= Scalar(delta) && mean_mass(k) > 0) {
            kept.push_back(k);
        } else {
            out.removed.push_back(k);
        }
    }
    if (kept.empty()) {
        Index heaviest = 0;
        mean_mass.maxCoeff(&heaviest);
        kept.push_back(heaviest);
        out.removed.erase(std::find(out.removed.begin(), out.removed.end(), heaviest));
    }
    if (out.removed.empty()) {
        out.resp = resp;
        out.model = model;
        out.surviving_mass = mean_mass;
        return out;
    }

    const auto K = static_cast<Index>(kept.size());
    out.resp.resize(resp.rows(), K);
    out.surviving_mass.resize(K);
    for (Index i = 0; i < K; ++i) {
        out.resp.col(i) = resp.col(kept[static_cast<std::size_t>(i)]);
        out.surviving_mass(i) = mean_mass(kept[static_cast<std::size_t>(i)]);
    }
    for (Index n = 0; n < out.resp.rows(); ++n) {
        const Scalar total = out.resp.row(n).sum();
        if (total > 0) {
            out.resp.row(n) /= total;
        } else {
            out.resp.row(n).setConstant(Scalar(1) / Scalar(K));
        }
    }
    out.model = model.keep_regions(kept);
    return out;
}

// sum beta log f - omega sum_k log(sum_n beta + 1) + H(beta).
template <typename Scalar>
Scalar fab_lower_bound(const BinarizedDataset<Scalar>& data, const SimplifiedModel<Scalar>& model,
                       const Matrix<Scalar>& resp, Scalar omega_value) {
    return fab_estep_objective(log_joint_matrix(data, model), resp, omega_value);
}

template <typename Scalar>
struct FabResult : FitResult<Scalar> {
    double omega = 0;
    // Mean responsibility of each surviving region at the last truncation check.
    Vector<Scalar> last_truncation_mass;
    std::vector<int> inner_iterations;  // per outer iteration
};

// Initialization matches em_fit with the same seed and K = k_max: Dirichlet(1)
// responsibilities followed by one M-step. Each outer iteration runs the
// E-step to its fixed point, truncates, then applies the M-step.
template <typename Scalar>
FabResult<Scalar> fab_fit(const BinarizedDataset<Scalar>& data, const FabConfig& config) {
    if (config.k_max < 1) throw Error("K_max must be at least 1");
    if (!(config.delta >= 0 && config.delta < 1)) throw Error("delta must lie in [0, 1)");
    if (data.rows() < 1) throw Error("dataset is empty");

    FabResult<Scalar> fit;
    fit.omega = omega_for(data, config);
    const Scalar w = Scalar(fit.omega);
    Rng rng(config.seed);
    fit.resp = random_responsibilities<Scalar>(data.rows(), config.k_max, rng);
    fit.model = mstep(data, fit.resp);
    Matrix<Scalar> log_f = log_joint_matrix(data, fit.model);
    fit.trace.objective.push_back(double(fab_estep_objective(log_f, fit.resp, w)));
    fit.trace.regions.push_back(config.k_max);
    fit.last_truncation_mass = fit.resp.colwise().mean().transpose();

    for (int it = 0; it < config.outer_max_iter; ++it) {
        auto estep = fab_estep(log_f, fit.resp, w, config.inner_tol, config.inner_max_iter);
        fit.inner_iterations.push_back(estep.iterations);
        bool truncated = false;
        if (config.truncation) {
            auto cut = truncate(estep.resp, fit.model, config.delta);
            truncated = !cut.removed.empty();
            fit.resp = std::move(cut.resp);
            fit.last_truncation_mass = std::move(cut.surviving_mass);
        } else {
            fit.resp = std::move(estep.resp);
        }
        fit.model = mstep(data, fit.resp);
        log_f = log_joint_matrix(data, fit.model);
        const double bound = double(fab_estep_objective(log_f, fit.resp, w));
        const double previous = fit.trace.objective.back();
        fit.trace.objective.push_back(bound);
        fit.trace.regions.push_back(fit.model.regions());
        fit.trace.iterations = it + 1;
        if (!truncated && bound_converged(previous, bound, config.outer_tol)) {
            fit.trace.converged = true;
            break;
        }
    }
    return fit;
}

struct RestartReport {
    int restart = 0;
    std::uint64_t seed = 0;
    Index regions = 0;
    double train_error = 0;  // unnormalized, as used for selection
    double bound = 0;
    int iterations = 0;
    bool converged = false;
    double seconds = 0;
};

template <typename Scalar>
struct RestartOutcome {
    FabResult<Scalar> best;
    int best_restart = 0;
    std::vector<RestartReport> reports;
    double total_seconds = 0;
};

// M independent fab_fit runs (restart m uses seed derive_seed(seed, m)); the
// winner has the smallest training error, then fewer regions, then the lower
// restart index.
template <typename Scalar>
RestartOutcome<Scalar> fit_with_restarts(const BinarizedDataset<Scalar>& data, const FabConfig& config) {
    if (config.restarts < 1) throw Error("restarts must be at least 1");
    const auto start = Clock::now();
    struct Run {
        FabResult<Scalar> fit;
        RestartReport report;
    };
    auto runs = parallel_map<Run>(config.restarts, config.threads, [&](int m) {
        const auto t0 = Clock::now();
        FabConfig single = config;
        single.seed = derive_seed(config.seed, static_cast<std::uint64_t>(m));
        Run run;
        run.fit = fab_fit(data, single);
        run.report.restart = m;
        run.report.seed = single.seed;
        run.report.regions = run.fit.model.regions();
        run.report.train_error = double(model_error(data, run.fit.model));
        run.report.bound = run.fit.trace.objective.back();
        run.report.iterations = run.fit.trace.iterations;
        run.report.converged = run.fit.trace.converged;
        run.report.seconds = seconds_since(t0);
        return run;
    });

    RestartOutcome<Scalar> out;
    for (int m = 1; m < config.restarts; ++m) {
        const auto& a = runs[static_cast<std::size_t>(m)].report;
        const auto& b = runs[static_cast<std::size_t>(out.best_restart)].report;
        if (a.train_error < b.train_error || (a.train_error == b.train_error && a.regions < b.regions)) out.best_restart = m;
    }
    for (auto& run : runs) out.reports.push_back(run.report);
    out.best = std::move(runs[static_cast<std::size_t>(out.best_restart)].fit);
    out.total_seconds = seconds_since(start);
    return out;
}

}  // namespace defrag
