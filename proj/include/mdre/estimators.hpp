#pragma once

// Log-ratio readouts from fitted estimators, and the KL / MI estimates built on them.

#include "mdre/training.hpp"

namespace mdre {

/// log p(x)/q(x) = h_p(x) - h_q(x) for an MDRE or BDRE fit.
template <ScoreFamily Score>
double mdre_log_ratio(const FittedEstimator<Score>& fit, const Eigen::Ref<const Vector>& x) {
    require(fit.method != Method::tre, "mdre_log_ratio needs a single-classifier fit");
    return fit.models.front().log_ratio(0, 1, x);
}

/// log p_i(x)/p_j(x) = h_i(x) - h_j(x) for classes i != j of an MDRE fit.
template <ScoreFamily Score>
double pair_log_ratio(const FittedEstimator<Score>& fit, Index i, Index j, const Eigen::Ref<const Vector>& x) {
    require(fit.method != Method::tre, "pair_log_ratio needs a single-classifier fit");
    require(i != j, "pair_log_ratio needs two distinct classes");
    return fit.models.front().log_ratio(i, j, x);
}

/// Telescoped TRE readout: the sum of the link logits h_{m_{k-1}} - h_{m_k}.
template <ScoreFamily Score>
double tre_log_ratio(const FittedEstimator<Score>& fit, const Eigen::Ref<const Vector>& x) {
    require(fit.method == Method::tre, "tre_log_ratio needs a TRE fit");
    double s = 0.0;
    for (const auto& link : fit.models) s += link.log_ratio(0, 1, x);
    return s;
}

/// An estimator read as the log-ratio between classes i and j (0 = p, 1 = q).
template <ScoreFamily Score>
class LogRatioFunction {
public:
    explicit LogRatioFunction(const FittedEstimator<Score>& fit, Index i = 0, Index j = 1)
        : fit_(&fit), i_(i), j_(j) {
        require(i != j, "a log-ratio needs two distinct classes");
        if (fit.method == Method::tre) {
            require(i == 0 && j == 1, "a TRE chain only reads the p/q ratio");
        } else {
            fit.models.front().check_class(i);
            fit.models.front().check_class(j);
        }
    }

    double operator()(const Eigen::Ref<const Vector>& x) const {
        return fit_->method == Method::tre ? tre_log_ratio(*fit_, x) : pair_log_ratio(*fit_, i_, j_, x);
    }

    Vector rows(const Matrix& x) const {
        if (fit_->method != Method::tre) return fit_->models.front().log_ratio_rows(i_, j_, x);
        Vector s = Vector::Zero(x.rows());
        for (const auto& link : fit_->models) s += link.log_ratio_rows(0, 1, x);
        return s;
    }

private:
    const FittedEstimator<Score>* fit_;
    Index i_;
    Index j_;
};

struct MonteCarloEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Sample mean and its standard error.
inline MonteCarloEstimate mean_with_error(const Vector& values) {
    require(values.size() >= 2, "a Monte Carlo estimate needs at least two values");
    const double n = static_cast<double>(values.size());
    const double mean = values.mean();
    const double var = (values.array() - mean).square().sum() / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

/// KL(p || q) as the mean log-ratio over samples from p.
template <ScoreFamily Score>
MonteCarloEstimate estimate_kl(const LogRatioFunction<Score>& ratio, const Matrix& samples_from_p) {
    require(samples_from_p.rows() >= 2, "KL estimation needs at least two samples");
    return mean_with_error(ratio.rows(samples_from_p));
}

enum class MarginalMode {
    halves,          // permute the second half of the columns jointly
    per_coordinate,  // permute every column independently
};

/// Rows from the product of marginals: the dependent part of each row is replaced
/// by the same part of a randomly chosen other row, keeping every column's multiset.
inline Matrix product_of_marginals(const Matrix& joint, std::uint64_t seed,
                                   MarginalMode mode = MarginalMode::per_coordinate) {
    require(joint.rows() >= 1, "product of marginals needs samples");
    const Index n = joint.rows();
    const Index d = joint.cols();
    Matrix out = joint;
    Rng rng = make_rng(seed, 31);
    if (mode == MarginalMode::halves) {
        require(d % 2 == 0, "half-split marginals need an even dimension");
        const auto perm = random_permutation(n, rng);
        for (Index i = 0; i < n; ++i) out.row(i).tail(d / 2) = joint.row(perm[static_cast<std::size_t>(i)]).tail(d / 2);
    } else {
        for (Index j = 0; j < d; ++j) {
            const auto perm = random_permutation(n, rng);
            for (Index i = 0; i < n; ++i) out(i, j) = joint(perm[static_cast<std::size_t>(i)], j);
        }
    }
    return out;
}

/// MI as KL(joint || product of marginals), read on joint samples. The fit must have
/// been trained with joint samples as class 0 and product-of-marginals samples as class 1.
template <ScoreFamily Score>
MonteCarloEstimate estimate_mi(const FittedEstimator<Score>& fit, const Matrix& samples_joint) {
    return estimate_kl(LogRatioFunction<Score>(fit), samples_joint);
}

}  // namespace mdre
