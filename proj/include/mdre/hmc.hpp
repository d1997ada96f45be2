#pragma once

// Posterior uncertainty of log-ratio estimates: HMC over classifier parameters with
// an isotropic Gaussian prior and the multinomial classification likelihood.

#include "mdre/score.hpp"
#include "mdre/distributions.hpp"

#include <vector>

namespace mdre {

struct HmcConfig {
    double step_size = 1e-3;
    Index leapfrog_steps = 20;
    Index n_samples = 500;
    Index burn_in = 200;
    double prior_std = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        require(step_size > 0.0, "HMC step size must be positive");
        require(leapfrog_steps >= 1, "HMC needs at least one leapfrog step");
        require(n_samples >= 1, "HMC needs at least one retained draw");
        require(burn_in >= 0, "HMC burn-in must be non-negative");
        require(prior_std > 0.0, "prior standard deviation must be positive");
    }
};

/// Sum over all labelled rows of log P(Y = c | x; theta) minus |theta|^2 / (2 prior_std^2).
/// `model` supplies the parameters theta (ScoreSet::parameters()).
template <ScoreFamily Score>
double log_posterior(const ScoreSet<Score>& model, const ClassedSamples& data, double prior_std,
                     Vector* gradient = nullptr) {
    require(prior_std > 0.0, "prior standard deviation must be positive");
    const Vector theta = model.parameters();
    const Vector ones = Vector::Ones(model.num_classes());
    const double nll = weighted_nll(model, data, ones, gradient);
    const double inv_var = 1.0 / (prior_std * prior_std);
    if (gradient) *gradient = -*gradient - inv_var * theta;
    return -nll - 0.5 * inv_var * theta.squaredNorm();
}

struct HmcResult {
    std::vector<Vector> draws;
    double acceptance_rate = 0.0;
    std::vector<double> energy_errors;  // H(end) - H(start) of every accepted trajectory
};

/// Leapfrog HMC with identity mass matrix, started at `init`'s parameters.
template <ScoreFamily Score>
HmcResult hmc_sample(const ClassedSamples& data, const ScoreSet<Score>& init, const HmcConfig& cfg) {
    cfg.validate();
    ScoreSet<Score> model = init;
    Vector theta = model.parameters();
    require(theta.allFinite(), "HMC initial parameters must be finite");

    auto potential = [&](const Vector& t, Vector& grad) {
        model.set_parameters(t);
        const double lp = log_posterior(model, data, cfg.prior_std, &grad);
        grad = -grad;
        return -lp;
    };

    Rng rng = make_rng(cfg.seed, 201);
    detail::NormalSource normal(rng);
    Vector grad;
    double u = potential(theta, grad);
    require(std::isfinite(u), "HMC initial log-posterior must be finite");

    HmcResult out;
    Index accepted = 0;
    const Index total = cfg.burn_in + cfg.n_samples;
    Vector mom(theta.size());
    for (Index it = 0; it < total; ++it) {
        for (Index i = 0; i < mom.size(); ++i) mom[i] = normal();
        const double h0 = u + 0.5 * mom.squaredNorm();

        Vector q = theta;
        Vector g = grad;
        double u1 = u;
        mom -= 0.5 * cfg.step_size * g;
        for (Index s = 0; s < cfg.leapfrog_steps; ++s) {
            q += cfg.step_size * mom;
            u1 = potential(q, g);
            if (!std::isfinite(u1)) break;
            if (s + 1 < cfg.leapfrog_steps) mom -= cfg.step_size * g;
        }
        mom -= 0.5 * cfg.step_size * g;
        const double h1 = u1 + 0.5 * mom.squaredNorm();
        const double log_u = std::log(uniform_open(rng));

        if (std::isfinite(h1) && log_u < h0 - h1) {
            theta = q;
            grad = g;
            u = u1;
            out.energy_errors.push_back(h1 - h0);
            if (it >= cfg.burn_in) ++accepted;
        }
        if (it >= cfg.burn_in) out.draws.push_back(theta);
    }
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.n_samples);
    return out;
}

struct PosteriorRatioStats {
    Vector mean;
    Vector stddev;
};

/// Posterior mean and standard deviation of h_i - h_j at each row of `points`, over
/// parameter draws interpreted through `model`'s layout.
template <ScoreFamily Score>
PosteriorRatioStats ratio_uncertainty(const ScoreSet<Score>& model, const std::vector<Vector>& draws,
                                      const Matrix& points, Index i = 0, Index j = 1) {
    require(draws.size() >= 2, "ratio uncertainty needs at least two draws");
    ScoreSet<Score> m = model;
    const Index n = points.rows();
    Vector sum = Vector::Zero(n);
    Vector sum_sq = Vector::Zero(n);
    std::vector<Vector> values;
    values.reserve(draws.size());
    for (const auto& d : draws) {
        m.set_parameters(d);
        values.push_back(m.log_ratio_rows(i, j, points));
        sum += values.back() - values.front();
    }
    const double k = static_cast<double>(draws.size());
    PosteriorRatioStats s;
    // Shifted by the first draw so identical draws give exactly zero spread.
    s.mean = values.front() + sum / k;
    for (const auto& v : values) sum_sq += (v - s.mean).cwiseAbs2();
    s.stddev = (sum_sq / (k - 1.0)).cwiseSqrt();
    return s;
}

}  // namespace mdre
