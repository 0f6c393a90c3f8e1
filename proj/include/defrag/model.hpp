#pragma once

// The simplified region model: K regions, each a Bernoulli generator of the
// binary feature s (eta), an output distribution (phi) and a mixing weight
// (alpha). Everything is evaluated in the log domain with probabilities
// floored at kProbFloor, so every log-likelihood is finite.

#include "defrag/binarizer.hpp"
#include "defrag/common.hpp"
#include "defrag/data.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace defrag {

template <typename Scalar>
struct SimplifiedModel {
    Task task = Task::regression;
    int n_classes = 0;
    StatementTable table;
    Vector<Scalar> alpha;   // K
    Matrix<Scalar> eta;     // K x L
    Vector<Scalar> mu;      // K, regression
    Vector<Scalar> lambda;  // K, regression precision
    Matrix<Scalar> gamma;   // K x C, classification

    Index regions() const { return alpha.size(); }
    Index statements() const { return eta.cols(); }

    // Throws Error when a shape or simplex invariant is violated.
    void validate() const;

    // Sub-model restricted to the listed regions, alpha renormalized.
    SimplifiedModel keep_regions(const std::vector<Index>& kept) const;
};

template <typename Scalar>
Scalar floor_prob(Scalar p) {
    return std::max(p, Scalar(kProbFloor));
}

template <typename Scalar>
Scalar clip_prob(Scalar p) {
    return std::clamp(p, Scalar(kProbFloor), Scalar(1 - kProbFloor));
}

template <typename Scalar>
void SimplifiedModel<Scalar>::validate() const {
    const Index K = regions();
    if (K < 1) throw Error("model has no regions");
    if (eta.rows() != K) throw Error("eta row count does not match K");
    if (static_cast<std::size_t>(eta.cols()) != table.size()) throw Error("eta column count does not match the statement table");
    if ((eta.array() < 0).any() || (eta.array() > 1).any()) throw Error("eta entries must lie in [0, 1]");
    if ((alpha.array() < 0).any() || std::abs(alpha.sum() - Scalar(1)) > Scalar(1e-9)) throw Error("alpha is not a distribution");
    if (task == Task::regression) {
        if (mu.size() != K || lambda.size() != K) throw Error("mu/lambda size does not match K");
        if (!mu.allFinite() || !(lambda.array() > 0).all() || !lambda.allFinite()) throw Error("invalid mu/lambda");
    } else {
        if (n_classes < 2 || gamma.rows() != K || gamma.cols() != n_classes) throw Error("gamma shape does not match K x C");
        if ((gamma.array() < 0).any()) throw Error("gamma has negative entries");
        for (Index k = 0; k < K; ++k) {
            if (std::abs(gamma.row(k).sum() - Scalar(1)) > Scalar(1e-9)) throw Error("gamma row is not a distribution");
        }
    }
}

template <typename Scalar>
SimplifiedModel<Scalar> SimplifiedModel<Scalar>::keep_regions(const std::vector<Index>& kept) const {
    SimplifiedModel out;
    out.task = task;
    out.n_classes = n_classes;
    out.table = table;
    const auto K = static_cast<Index>(kept.size());
    out.alpha.resize(K);
    out.eta.resize(K, eta.cols());
    if (task == Task::regression) {
        out.mu.resize(K);
        out.lambda.resize(K);
    } else {
        out.gamma.resize(K, gamma.cols());
    }
    for (Index i = 0; i < K; ++i) {
        const Index k = kept[static_cast<std::size_t>(i)];
        out.alpha(i) = alpha(k);
        out.eta.row(i) = eta.row(k);
        if (task == Task::regression) {
            out.mu(i) = mu(k);
            out.lambda(i) = lambda(k);
        } else {
            out.gamma.row(i) = gamma.row(k);
        }
    }
    const Scalar total = out.alpha.sum();
    if (total > 0) {
        out.alpha /= total;
    } else {
        out.alpha.setConstant(Scalar(1) / Scalar(K));
    }
    return out;
}

// log p(s | k) = sum_l s_l log eta_kl + (1 - s_l) log(1 - eta_kl).
template <typename Scalar, typename Derived>
Scalar log_p_s_given_k(const Eigen::MatrixBase<Derived>& s, const SimplifiedModel<Scalar>& model, Index k) {
    Scalar total = 0;
    for (Index l = 0; l < model.statements(); ++l) {
        const Scalar e = clip_prob(model.eta(k, l));
        total += s(l) > Scalar(0.5) ? std::log(e) : std::log1p(-e);
    }
    return total;
}

// Regression: y is the value. Classification: y is the class index.
template <typename Scalar>
Scalar log_p_y_given_k(Scalar y, const SimplifiedModel<Scalar>& model, Index k) {
    if (model.task == Task::regression) {
        const Scalar lambda = std::max(model.lambda(k), Scalar(kPrecisionFloor));
        const Scalar r = y - model.mu(k);
        return Scalar(0.5) * std::log(lambda) - Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) -
               Scalar(0.5) * lambda * r * r;
    }
    const auto c = static_cast<Index>(y);
    if (c < 0 || c >= model.n_classes || Scalar(c) != y) throw Error("class index out of range");
    return std::log(floor_prob(model.gamma(k, c)));
}

// Classification with a one-hot target vector: sum_c y_c log gamma_kc.
template <typename Scalar, typename Derived>
Scalar log_p_onehot_given_k(const Eigen::MatrixBase<Derived>& y, const SimplifiedModel<Scalar>& model, Index k) {
    if (model.task != Task::classification) throw Error("one-hot targets require a classification model");
    if (y.size() != model.n_classes) throw Error("one-hot target has the wrong length");
    Index hot = -1;
    for (Index c = 0; c < y.size(); ++c) {
        if (y(c) == Scalar(1) && hot < 0) {
            hot = c;
        } else if (y(c) != Scalar(0)) {
            throw Error("classification target is not one-hot");
        }
    }
    if (hot < 0) throw Error("classification target is not one-hot");
    return log_p_y_given_k(Scalar(hot), model, k);
}

template <typename Scalar, typename Derived>
Scalar log_joint(Scalar y, const Eigen::MatrixBase<Derived>& s, const SimplifiedModel<Scalar>& model, Index k) {
    return log_p_y_given_k(y, model, k) + log_p_s_given_k(s, model, k) + std::log(floor_prob(model.alpha(k)));
}

// N x L bits against K x L eta -> N x K log p(s | k), as one matrix product.
template <typename Scalar>
Matrix<Scalar> log_p_s_matrix(const Matrix<Scalar>& bits, const SimplifiedModel<Scalar>& model) {
    const Matrix<Scalar> eta = model.eta.unaryExpr([](Scalar e) { return clip_prob(e); });
    const Matrix<Scalar> log_on = eta.array().log();
    const Matrix<Scalar> log_off = (-eta.array()).log1p();
    Matrix<Scalar> out = bits * (log_on - log_off).transpose();
    out.rowwise() += log_off.rowwise().sum().transpose();
    return out;
}

// Prior-weighted region scores log p(s | k) + log alpha_k.
template <typename Scalar>
Matrix<Scalar> region_scores(const Matrix<Scalar>& bits, const SimplifiedModel<Scalar>& model) {
    Matrix<Scalar> out = log_p_s_matrix(bits, model);
    const RowVector<Scalar> log_alpha = model.alpha.transpose().unaryExpr([](Scalar a) { return std::log(floor_prob(a)); });
    out.rowwise() += log_alpha;
    return out;
}

// N x K matrix of log f_k^(n) = log p(y|k) + log p(s|k) + log alpha_k.
template <typename Scalar>
Matrix<Scalar> log_joint_matrix(const BinarizedDataset<Scalar>& data, const SimplifiedModel<Scalar>& model) {
    Matrix<Scalar> out = region_scores(data.bits, model);
    const Index N = data.rows();
    const Index K = model.regions();
    if (model.task == Task::regression) {
        const Scalar half_log_2pi = Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
        for (Index k = 0; k < K; ++k) {
            const Scalar lambda = std::max(model.lambda(k), Scalar(kPrecisionFloor));
            const Scalar base = Scalar(0.5) * std::log(lambda) - half_log_2pi;
            out.col(k).array() += base - Scalar(0.5) * lambda * (data.target.array() - model.mu(k)).square();
        }
    } else {
        const Matrix<Scalar> log_gamma = model.gamma.unaryExpr([](Scalar g) { return std::log(floor_prob(g)); });
        for (Index n = 0; n < N; ++n) out.row(n) += log_gamma.col(static_cast<Index>(data.target(n))).transpose();
    }
    return out;
}

// Row-wise softmax with a max shift.
template <typename Derived>
Matrix<typename Derived::Scalar> row_softmax(const Eigen::MatrixBase<Derived>& logits) {
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> out = logits;
    for (Index n = 0; n < out.rows(); ++n) {
        auto row = out.row(n);
        row.array() -= row.maxCoeff();
        row = row.array().exp().matrix();
        row /= row.sum();
    }
    return out;
}

// H(q) = -sum beta log beta, with 0 log 0 = 0.
template <typename Derived>
typename Derived::Scalar responsibility_entropy(const Eigen::MatrixBase<Derived>& resp) {
    using Scalar = typename Derived::Scalar;
    return -resp.unaryExpr([](Scalar b) { return b > 0 ? b * std::log(b) : Scalar(0); }).sum();
}

template <typename Scalar>
struct Prediction {
    Index region = 0;
    Scalar value = 0;  // regression mean or class index
};

// Scores within this distance (log domain) of the maximum count as tied, so
// regions that tie in exact arithmetic do not split on rounding noise.
inline constexpr double kTieTolerance = 1e-9;

// Lowest index whose score is within kTieTolerance of the maximum.
template <typename Derived>
Index tied_argmax(const Eigen::MatrixBase<Derived>& scores) {
    using Scalar = typename Derived::Scalar;
    const Scalar best = scores.maxCoeff();
    for (Index i = 0; i < scores.size(); ++i) {
        if (scores(i) >= best - Scalar(kTieTolerance)) return i;
    }
    return 0;
}

template <typename Scalar>
Scalar region_output(const SimplifiedModel<Scalar>& model, Index k) {
    if (model.task == Task::regression) return model.mu(k);
    return Scalar(tied_argmax(model.gamma.row(k)));
}

// Two-step MAP: k = argmax p(s|k) alpha_k, then the most probable output of k.
// Both steps break ties (up to kTieTolerance) to the lowest index.
template <typename Scalar, typename Derived>
Prediction<Scalar> predict(const Eigen::MatrixBase<Derived>& s, const SimplifiedModel<Scalar>& model) {
    Vector<Scalar> scores(model.regions());
    for (Index k = 0; k < model.regions(); ++k) {
        scores(k) = log_p_s_given_k(s, model, k) + std::log(floor_prob(model.alpha(k)));
    }
    const Index best = tied_argmax(scores);
    return {best, region_output(model, best)};
}

template <typename Scalar>
struct BatchPrediction {
    Eigen::VectorXi region;
    Vector<Scalar> value;
};

template <typename Scalar>
BatchPrediction<Scalar> predict_batch(const Matrix<Scalar>& bits, const SimplifiedModel<Scalar>& model) {
    const Matrix<Scalar> scores = region_scores(bits, model);
    BatchPrediction<Scalar> out{Eigen::VectorXi(bits.rows()), Vector<Scalar>(bits.rows())};
    for (Index n = 0; n < bits.rows(); ++n) {
        const Index k = tied_argmax(scores.row(n));
        out.region(n) = static_cast<int>(k);
        out.value(n) = region_output(model, k);
    }
    return out;
}

// Sum of squared residuals (regression) or misclassification count.
template <typename Scalar>
Scalar model_error(const BinarizedDataset<Scalar>& data, const SimplifiedModel<Scalar>& model) {
    if (data.task != model.task) throw Error("dataset task does not match the model task");
    const auto pred = predict_batch(data.bits, model);
    if (model.task == Task::regression) return (data.target - pred.value).squaredNorm();
    return Scalar((data.target.array() != pred.value.array()).count());
}

template <typename Scalar>
Scalar mean_model_error(const BinarizedDataset<Scalar>& data, const SimplifiedModel<Scalar>& model) {
    return model_error(data, model) / Scalar(data.rows());
}

}  // namespace defrag
