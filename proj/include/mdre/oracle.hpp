#pragma once

// Ground truth that does not go through any fitted model: 1D quadrature, Monte Carlo
// with exact log-densities, and exact log-ratios of discrete tables.

#include "mdre/distributions.hpp"
#include "mdre/estimators.hpp"

#include <vector>

namespace mdre {

struct QuadratureGrid {
    double lo = -1.0;
    double hi = 1.0;
    Index n_points = Index{1} << 14;
};

struct QuadratureResult {
    double value = 0.0;
    Index points = 0;        // resolution of the accepted estimate
    double last_change = 0;  // |I(n) - I(n/2)| at acceptance
    bool converged = false;
    Index support_violations = 0;  // grid points where p > 0 but q = 0
};

namespace detail {

struct Window {
    double lo;
    double hi;
};

inline Window effective_window(const DistributionSpec& spec) {
    return std::visit(overloaded{
                          [](const Gaussian& g) {
                              const double s = std::sqrt(detail::CovarianceFactor(g.cov, 1).dense()(0, 0));
                              return Window{g.mean[0] - 10.0 * s, g.mean[0] + 10.0 * s};
                          },
                          [](const Cauchy& c) {
                              return Window{c.location[0] - 10.0 * c.scale[0], c.location[0] + 10.0 * c.scale[0]};
                          },
                          [](const StudentT& t) {
                              const double s = std::sqrt(detail::CovarianceFactor(t.scale, 1).dense()(0, 0));
                              return Window{t.location[0] - 10.0 * s, t.location[0] + 10.0 * s};
                          },
                          [](const TruncatedNormal& t) {
                              return Window{std::max(t.low, t.loc - 10.0 * t.scale),
                                            std::min(t.high, t.loc + 10.0 * t.scale)};
                          },
                          [](const Mixture& m) {
                              Window w{kPosInf, kNegInf};
                              for (const auto& c : m.components) {
                                  const Window cw = effective_window(c);
                                  w.lo = std::min(w.lo, cw.lo);
                                  w.hi = std::max(w.hi, cw.hi);
                              }
                              return w;
                          },
                      },
                      spec.value);
}

}  // namespace detail

/// Default integration window: p's location +- 10 scales, clipped to p's support.
inline QuadratureGrid default_grid(const DistributionSpec& p) {
    require(dimension(p) == 1, "quadrature grids are one-dimensional");
    const auto w = detail::effective_window(p);
    return {w.lo, w.hi, Index{1} << 14};
}

/// Trapezoidal KL(p || q) on a uniform grid, doubling the resolution until two
/// successive estimates differ by less than `tolerance`.
inline QuadratureResult quadrature_kl_1d(const DistributionSpec& p, const DistributionSpec& q,
                                         const QuadratureGrid& grid, double tolerance = 1e-4,
                                         Index max_points = Index{1} << 24) {
    require(dimension(p) == 1 && dimension(q) == 1, "quadrature KL needs one-dimensional specs");
    require(grid.lo < grid.hi && grid.n_points >= 2, "quadrature grid must be a non-empty interval");
    const LogDensity lp(p);
    const LogDensity lq(q);

    auto integrate = [&](Index n, Index& violations) {
        violations = 0;
        const double h = (grid.hi - grid.lo) / static_cast<double>(n - 1);
        double sum = 0.0;
        Vector x(1);
        for (Index i = 0; i < n; ++i) {
            x[0] = i == n - 1 ? grid.hi : grid.lo + h * static_cast<double>(i);
            const double a = lp(x);
            const double dens = std::exp(a);
            if (!(dens > 1e-300)) continue;
            const double b = lq(x);
            if (b == kNegInf) {
                ++violations;
                continue;
            }
            const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            sum += w * dens * (a - b);
        }
        return sum * h;
    };

    QuadratureResult r;
    Index n = std::max<Index>(grid.n_points, 3);
    Index violations = 0;
    double prev = integrate(n, violations);
    if (violations > 0) {
        r.value = kPosInf;
        r.support_violations = violations;
        r.points = n;
        return r;
    }
    while (n < max_points) {
        n = 2 * n - 1;  // keeps the previous nodes
        const double cur = integrate(n, violations);
        r.last_change = std::abs(cur - prev);
        prev = cur;
        if (r.last_change < tolerance) {
            r.converged = true;
            break;
        }
    }
    r.value = prev;
    r.points = n;
    return r;
}

inline QuadratureResult quadrature_kl_1d(const DistributionSpec& p, const DistributionSpec& q) {
    return quadrature_kl_1d(p, q, default_grid(p));
}

struct MonteCarloKl {
    double estimate = 0.0;
    double standard_error = 0.0;
    Index offending_draws = 0;  // draws from p where q's log-density is -inf
};

/// Mean of ln p - ln q over n draws from p.
inline MonteCarloKl mc_kl(const DistributionSpec& p, const DistributionSpec& q, Index n, std::uint64_t seed) {
    require(n >= 2, "Monte Carlo KL needs at least two draws");
    if (dimension(p) != dimension(q)) throw DimensionMismatch("mc_kl", dimension(p), dimension(q));
    const Matrix x = sample(p, n, seed);
    const Vector a = LogDensity(p).rows(x);
    const Vector b = LogDensity(q).rows(x);
    MonteCarloKl r;
    r.offending_draws = (b.array() == kNegInf).count();
    if (r.offending_draws > 0) {
        r.estimate = kPosInf;
        r.standard_error = kPosInf;
        return r;
    }
    const auto e = mean_with_error(a - b);
    r.estimate = e.mean;
    r.standard_error = e.standard_error;
    return r;
}

/// Exact pairwise log-ratios ln(p_i(s) / p_j(s)) of discrete tables.
class TabularRatios {
public:
    explicit TabularRatios(std::vector<Vector> tables) : log_tables_(std::move(tables)) {
        require(log_tables_.size() >= 2, "tabular ratios need at least two tables");
        const Index s = log_tables_.front().size();
        require(s >= 1, "tables must be non-empty");
        for (auto& t : log_tables_) {
            if (t.size() != s) throw DimensionMismatch("probability table", s, t.size());
            require((t.array() > 0.0).all(), "probability tables must be strictly positive");
            require(std::abs(t.sum() - 1.0) <= 1e-9, "probability tables must sum to 1");
            t = t.array().log().matrix();
        }
    }

    Index tables() const { return static_cast<Index>(log_tables_.size()); }
    Index outcomes() const { return log_tables_.front().size(); }

    Vector ratio(Index i, Index j) const {
        require(i >= 0 && i < tables() && j >= 0 && j < tables(), "table index out of range");
        return log_tables_[static_cast<std::size_t>(i)] - log_tables_[static_cast<std::size_t>(j)];
    }

private:
    std::vector<Vector> log_tables_;
};

inline TabularRatios exact_tabular_ratios(std::vector<Vector> tables) { return TabularRatios(std::move(tables)); }

}  // namespace mdre
