#pragma once

// Maximum-likelihood fitting of the region model for a fixed number of
// regions. The M-step here is shared with FAB inference.

#include "defrag/model.hpp"
#include "defrag/parallel.hpp"
#include "defrag/rng.hpp"

#include <chrono>
#include <cstdint>
#include <limits>
#include <vector>

namespace defrag {

struct FitTrace {
    std::vector<double> objective;  // bound after initialization, then after every iteration
    std::vector<Index> regions;     // K after every entry of `objective`
    int iterations = 0;
    bool converged = false;
};

template <typename Scalar>
struct FitResult {
    SimplifiedModel<Scalar> model;
    Matrix<Scalar> resp;  // responsibilities the final M-step used
    FitTrace trace;
};

struct EmOptions {
    double tol = 1e-6;  // relative change of the bound
    int max_iter = 300;
};

// Maximizer of sum_i w_i log p_i over the simplex with p_i >= kProbFloor.
// Reduces to w / sum(w) whenever that already clears the floor.
template <typename Derived>
Vector<typename Derived::Scalar> floored_simplex(const Eigen::MatrixBase<Derived>& weights) {
    using Scalar = typename Derived::Scalar;
    const Index n = weights.size();
    const Scalar floor = Scalar(kProbFloor);
    std::vector<bool> pinned(static_cast<std::size_t>(n), false);
    Vector<Scalar> p(n);
    for (;;) {
        Scalar free_weight = 0;
        Index n_pinned = 0;
        for (Index i = 0; i < n; ++i) {
            if (pinned[static_cast<std::size_t>(i)]) {
                ++n_pinned;
            } else {
                free_weight += weights(i);
            }
        }
        const Scalar free_mass = Scalar(1) - floor * Scalar(n_pinned);
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            if (pinned[static_cast<std::size_t>(i)]) {
                p(i) = floor;
                continue;
            }
            p(i) = free_weight > 0 ? free_mass * weights(i) / free_weight : free_mass / Scalar(n - n_pinned);
            if (p(i) < floor) {
                pinned[static_cast<std::size_t>(i)] = true;
                changed = true;
            }
        }
        if (!changed) return p;
    }
}

// q(u_k^(n) = 1) proportional to f_k^(n).
template <typename Scalar>
Matrix<Scalar> em_estep(const BinarizedDataset<Scalar>& data, const SimplifiedModel<Scalar>& model) {
    return row_softmax(log_joint_matrix(data, model));
}

// Closed-form parameter update given responsibilities. Probabilities are
// kept inside the floors the likelihood uses, which makes this the exact
// maximizer of the floored objective.
template <typename Scalar>
SimplifiedModel<Scalar> mstep(const BinarizedDataset<Scalar>& data, const Matrix<Scalar>& resp) {
    const Index N = data.rows();
    const Index K = resp.cols();
    if (resp.rows() != N) throw Error("responsibility rows do not match the dataset");
    const Vector<Scalar> mass = resp.colwise().sum().transpose();
    for (Index k = 0; k < K; ++k) {
        if (!(mass(k) > 0)) throw Error("region " + std::to_string(k) + " has zero responsibility mass");
    }

    SimplifiedModel<Scalar> model;
    model.task = data.task;
    model.n_classes = data.n_classes;
    model.table = data.table;

    model.eta = (resp.transpose() * data.bits).array().colwise() / mass.array();
    model.eta = model.eta.unaryExpr([](Scalar e) { return clip_prob(e); });
    model.alpha = floored_simplex(mass / Scalar(N));

    if (data.task == Task::regression) {
        model.mu = (resp.transpose() * data.target).array() / mass.array();
        model.lambda.resize(K);
        for (Index k = 0; k < K; ++k) {
            const Scalar var = (resp.col(k).array() * (data.target.array() - model.mu(k)).square()).sum() / mass(k);
            model.lambda(k) = std::max(Scalar(1) / std::max(var, Scalar(kVarianceFloor)), Scalar(kPrecisionFloor));
        }
    } else {
        Matrix<Scalar> counts = Matrix<Scalar>::Zero(K, data.n_classes);
        for (Index n = 0; n < N; ++n) counts.col(static_cast<Index>(data.target(n))) += resp.row(n).transpose();
        model.gamma.resize(K, data.n_classes);
        for (Index k = 0; k < K; ++k) model.gamma.row(k) = floored_simplex(counts.row(k).transpose() / mass(k)).transpose();
    }
    return model;
}

// Expected complete-data log-likelihood plus the entropy of the responsibilities.
template <typename Scalar>
Scalar em_lower_bound(const BinarizedDataset<Scalar>& data, const SimplifiedModel<Scalar>& model, const Matrix<Scalar>& resp) {
    const Matrix<Scalar> log_f = log_joint_matrix(data, model);
    return (resp.array() * log_f.array()).sum() + responsibility_entropy(resp);
}

// log p(D | params) = sum_n log sum_k f_k^(n).
template <typename Scalar>
Scalar log_likelihood(const BinarizedDataset<Scalar>& data, const SimplifiedModel<Scalar>& model) {
    const Matrix<Scalar> log_f = log_joint_matrix(data, model);
    Scalar total = 0;
    for (Index n = 0; n < log_f.rows(); ++n) {
        const Scalar m = log_f.row(n).maxCoeff();
        total += m + std::log((log_f.row(n).array() - m).exp().sum());
    }
    return total;
}

// Rows drawn from a symmetric Dirichlet(1).
template <typename Scalar>
Matrix<Scalar> random_responsibilities(Index rows, Index regions, Rng& rng) {
    Matrix<Scalar> resp(rows, regions);
    for (Index n = 0; n < rows; ++n) {
        for (Index k = 0; k < regions; ++k) resp(n, k) = Scalar(rng.exponential());
        resp.row(n) /= resp.row(n).sum();
    }
    return resp;
}

inline bool bound_converged(double previous, double current, double tol) {
    return std::abs(current - previous) <= tol * std::max(std::abs(previous), std::numeric_limits<double>::min());
}

// Gives every massless region the worst-explained point still unclaimed.
template <typename Scalar>
void reseed_empty_regions(Matrix<Scalar>& resp, const Matrix<Scalar>& log_f) {
    const Vector<Scalar> mass = resp.colwise().sum().transpose();
    std::vector<bool> used(static_cast<std::size_t>(resp.rows()), false);
    for (Index k = 0; k < resp.cols(); ++k) {
        if (mass(k) > 0) continue;
        Index worst = -1;
        Scalar worst_fit = std::numeric_limits<Scalar>::infinity();
        for (Index n = 0; n < resp.rows(); ++n) {
            const Scalar fit = log_f.row(n).maxCoeff();
            if (!used[static_cast<std::size_t>(n)] && fit < worst_fit) {
                worst_fit = fit;
                worst = n;
            }
        }
        if (worst < 0) throw Error("more regions than data points");
        used[static_cast<std::size_t>(worst)] = true;
        resp.row(worst).setZero();
        resp(worst, k) = 1;
    }
}

template <typename Scalar>
FitResult<Scalar> em_fit(const BinarizedDataset<Scalar>& data, Index regions, std::uint64_t seed, const EmOptions& options = {}) {
    if (regions < 1) throw Error("K must be at least 1");
    if (data.rows() < 1) throw Error("dataset is empty");
    Rng rng(seed);
    FitResult<Scalar> fit;
    fit.resp = random_responsibilities<Scalar>(data.rows(), regions, rng);
    fit.model = mstep(data, fit.resp);
    // log_f of the current parameters serves both the bound and the next E-step.
    Matrix<Scalar> log_f = log_joint_matrix(data, fit.model);
    fit.trace.objective.push_back(double((fit.resp.array() * log_f.array()).sum() + responsibility_entropy(fit.resp)));
    fit.trace.regions.push_back(regions);

    for (int it = 0; it < options.max_iter; ++it) {
        fit.resp = row_softmax(log_f);
        reseed_empty_regions(fit.resp, log_f);
        fit.model = mstep(data, fit.resp);
        log_f = log_joint_matrix(data, fit.model);
        const double bound = double((fit.resp.array() * log_f.array()).sum() + responsibility_entropy(fit.resp));
        const double previous = fit.trace.objective.back();
        fit.trace.objective.push_back(bound);
        fit.trace.regions.push_back(regions);
        fit.trace.iterations = it + 1;
        if (bound_converged(previous, bound, options.tol)) {
            fit.trace.converged = true;
            break;
        }
    }
    return fit;
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Scalar>
struct SweepEntry {
    Index regions = 0;
    FitResult<Scalar> best;
    int best_restart = 0;
    double train_error = 0;  // mean-normalized
    double test_error = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0;      // all restarts for this K
};

template <typename Scalar>
struct SweepResult {
    std::vector<SweepEntry<Scalar>> entries;
    double total_seconds = 0;
};

// em_fit for every K with `restarts` random initializations each; restart r
// uses seed derive_seed(seed, r) and the one with the smallest training error
// wins (ties to the lower restart).
template <typename Scalar>
SweepResult<Scalar> em_sweep(const BinarizedDataset<Scalar>& train, const BinarizedDataset<Scalar>* test,
                             const std::vector<Index>& k_range, int restarts, std::uint64_t seed,
                             const EmOptions& options = {}, int threads = 0) {
    if (restarts < 1) throw Error("restarts must be at least 1");
    SweepResult<Scalar> out;
    for (Index K : k_range) {
        const auto start = Clock::now();
        auto fits = parallel_map<FitResult<Scalar>>(restarts, threads, [&](int r) {
            return em_fit(train, K, derive_seed(seed, static_cast<std::uint64_t>(r)), options);
        });
        SweepEntry<Scalar> entry;
        entry.regions = K;
        Scalar best_error = std::numeric_limits<Scalar>::infinity();
        for (int r = 0; r < restarts; ++r) {
            const Scalar err = model_error(train, fits[static_cast<std::size_t>(r)].model);
            if (err < best_error) {
                best_error = err;
                entry.best_restart = r;
            }
        }
        entry.best = std::move(fits[static_cast<std::size_t>(entry.best_restart)]);
        entry.seconds = seconds_since(start);
        entry.train_error = double(best_error) / double(train.rows());
        if (test != nullptr) entry.test_error = double(mean_model_error(*test, entry.best.model));
        out.total_seconds += entry.seconds;
        out.entries.push_back(std::move(entry));
    }
    return out;
}

}  // namespace defrag
