#pragma once

// Parametric distributions: exact sampling, log-densities and closed-form
// Gaussian divergences. Sampling never touches shared state; every call seeds
// its own generator from the seed argument.

#include "mdre/core.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <functional>
#include <memory>
#include <numeric>
#include <variant>
#include <vector>

namespace mdre {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Covariance / scale descriptors
// ---------------------------------------------------------------------------

struct Isotropic {
    double variance = 1.0;
};
struct Diagonal {
    Vector variances;
};
/// Unit diagonal, `rho` on the off-diagonal of each consecutive (2i, 2i+1) block.
struct Block2x2 {
    double rho = 0.0;
};
struct FullCovariance {
    Matrix matrix;
};

using Covariance = std::variant<Isotropic, Diagonal, Block2x2, FullCovariance>;

struct Gaussian {
    Vector mean;
    Covariance cov = Isotropic{1.0};
};

struct Cauchy {
    Vector location;
    Vector scale;
};

struct StudentT {
    Vector location;
    Covariance scale = Isotropic{1.0};  // Isotropic, Diagonal or Block2x2
    double df = 1.0;
};

struct TruncatedNormal {
    double loc = 0.0;
    double scale = 1.0;
    double low = -1.0;
    double high = 1.0;
};

struct DistributionSpec;

struct Mixture {
    std::vector<double> weights;
    std::vector<DistributionSpec> components;
};

struct DistributionSpec {
    std::variant<Gaussian, Cauchy, StudentT, TruncatedNormal, Mixture> value;

    DistributionSpec() = default;
    template <class T>
        requires(!std::is_same_v<std::remove_cvref_t<T>, DistributionSpec>)
    DistributionSpec(T&& v) : value(std::forward<T>(v)) {}
};

// Convenience constructors -------------------------------------------------

inline Gaussian normal_1d(double mean, double stddev) {
    return Gaussian{Vector::Constant(1, mean), Isotropic{stddev * stddev}};
}

inline Gaussian block_gaussian(Index dim, double mean, double rho) {
    return Gaussian{Vector::Constant(dim, mean), Block2x2{rho}};
}

inline Gaussian standard_gaussian(Index dim, double mean = 0.0) {
    return Gaussian{Vector::Constant(dim, mean), Isotropic{1.0}};
}

inline Cauchy cauchy_1d(double location, double scale) {
    return Cauchy{Vector::Constant(1, location), Vector::Constant(1, scale)};
}

// ---------------------------------------------------------------------------
// Standard normal helpers
// ---------------------------------------------------------------------------

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_quantile(double u) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

/// ln(Phi(b) - Phi(a)) for a < b, computed on whichever tail keeps precision.
inline double log_normal_mass(double a, double b) {
    if (a > 0.0) return log_normal_mass(-b, -a);
    const double pb = normal_cdf(b);
    const double pa = normal_cdf(a);
    if (pb - pa > 0.0) return std::log(pb - pa);
    // Both endpoints deep in the lower tail: ln Phi(b) + ln(1 - Phi(a)/Phi(b)) using
    // the Mills-ratio asymptotic ln Phi(x) ~ -x^2/2 - ln(-x) - ln sqrt(2 pi).
    auto log_phi = [](double x) { return -0.5 * x * x - std::log(-x) - 0.5 * kLogTwoPi; };
    return log_phi(b) + std::log1p(-std::exp(log_phi(a) - log_phi(b)));
}

/// Standard normal draws via Box-Muller on our own uniforms (portable across
/// standard library implementations).
class NormalSource {
public:
    explicit NormalSource(Rng& rng) : rng_(rng) {}
    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open(rng_);
        const double u2 = uniform_open(rng_);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

private:
    Rng& rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Marsaglia-Tsang gamma(shape, 1) sampler.
inline double sample_gamma(double shape, Rng& rng, NormalSource& normal) {
    if (shape < 1.0) {
        const double u = uniform_open(rng);
        return sample_gamma(shape + 1.0, rng, normal) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z, v;
        do {
            z = normal();
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open(rng);
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return d * v;
    }
}

// Factorised covariance: sampling map z -> L z, quadratic form and log-determinant.
class CovarianceFactor {
public:
    CovarianceFactor(const Covariance& cov, Index dim) : dim_(dim) {
        std::visit(overloaded{
                       [&](const Isotropic& c) {
                           require(c.variance > 0.0, "isotropic variance must be positive");
                           kind_ = Kind::diagonal;
                           diag_ = Vector::Constant(dim, c.variance);
                       },
                       [&](const Diagonal& c) {
                           if (c.variances.size() != dim)
                               throw DimensionMismatch("diagonal covariance", dim, c.variances.size());
                           require((c.variances.array() > 0.0).all(), "diagonal variances must be positive");
                           kind_ = Kind::diagonal;
                           diag_ = c.variances;
                       },
                       [&](const Block2x2& c) {
                           require(dim % 2 == 0, "block2x2 covariance requires an even dimension");
                           require(c.rho > -1.0 && c.rho < 1.0, "block2x2 rho must lie in (-1, 1)");
                           kind_ = Kind::block;
                           rho_ = c.rho;
                       },
                       [&](const FullCovariance& c) {
                           if (c.matrix.rows() != dim || c.matrix.cols() != dim)
                               throw DimensionMismatch("full covariance", dim, c.matrix.rows());
                           require(c.matrix.isApprox(c.matrix.transpose(), 1e-12),
                                   "full covariance must be symmetric");
                           kind_ = Kind::full;
                           llt_.compute(c.matrix);
                           require(llt_.info() == Eigen::Success &&
                                       (llt_.matrixL().toDenseMatrix().diagonal().array() > 0.0).all(),
                                   "full covariance must be positive-definite");
                       },
                   },
                   cov);
    }

    Index dim() const { return dim_; }

    double log_det() const {
        switch (kind_) {
            case Kind::diagonal: return diag_.array().log().sum();
            case Kind::block: return 0.5 * static_cast<double>(dim_) * std::log1p(-rho_ * rho_);
            case Kind::full: return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
        }
        return 0.0;
    }

    /// (x)^T Sigma^{-1} (x) for a centred vector.
    double quad_form(const Eigen::Ref<const Vector>& x) const {
        switch (kind_) {
            case Kind::diagonal: return (x.array().square() / diag_.array()).sum();
            case Kind::block: {
                double s = 0.0;
                for (Index i = 0; i < dim_; i += 2) {
                    const double a = x[i], b = x[i + 1];
                    s += a * a - 2.0 * rho_ * a * b + b * b;
                }
                return s / (1.0 - rho_ * rho_);
            }
            case Kind::full: return llt_.matrixL().solve(x).squaredNorm();
        }
        return 0.0;
    }

    /// Applies the Cholesky factor in place: z <- L z.
    void apply(Eigen::Ref<Vector> z) const {
        switch (kind_) {
            case Kind::diagonal: z.array() *= diag_.array().sqrt(); return;
            case Kind::block: {
                const double s = std::sqrt(1.0 - rho_ * rho_);
                for (Index i = 0; i < dim_; i += 2) z[i + 1] = rho_ * z[i] + s * z[i + 1];
                return;
            }
            case Kind::full: z = llt_.matrixL() * z; return;
        }
    }

    Matrix dense() const {
        switch (kind_) {
            case Kind::diagonal: return diag_.asDiagonal();
            case Kind::block: {
                Matrix m = Matrix::Identity(dim_, dim_);
                for (Index i = 0; i < dim_; i += 2) m(i, i + 1) = m(i + 1, i) = rho_;
                return m;
            }
            case Kind::full: return llt_.reconstructedMatrix();
        }
        return {};
    }

private:
    enum class Kind { diagonal, block, full };
    Index dim_;
    Kind kind_ = Kind::diagonal;
    Vector diag_;
    double rho_ = 0.0;
    Eigen::LLT<Matrix> llt_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Validation and dimension
// ---------------------------------------------------------------------------

inline Index dimension(const DistributionSpec& spec) {
    return std::visit(overloaded{
                          [](const Gaussian& g) { return g.mean.size(); },
                          [](const Cauchy& c) { return c.location.size(); },
                          [](const StudentT& t) { return t.location.size(); },
                          [](const TruncatedNormal&) { return Index{1}; },
                          [](const Mixture& m) {
                              require(!m.components.empty(), "mixture needs at least one component");
                              return dimension(m.components.front());
                          },
                      },
                      spec.value);
}

inline void validate(const DistributionSpec& spec) {
    std::visit(overloaded{
                   [](const Gaussian& g) {
                       require(g.mean.size() >= 1, "gaussian mean must be non-empty");
                       detail::CovarianceFactor(g.cov, g.mean.size());
                   },
                   [](const Cauchy& c) {
                       require(c.location.size() >= 1, "cauchy location must be non-empty");
                       if (c.scale.size() != c.location.size())
                           throw DimensionMismatch("cauchy scale", c.location.size(), c.scale.size());
                       require((c.scale.array() > 0.0).all(), "cauchy scale must be positive");
                   },
                   [](const StudentT& t) {
                       require(t.location.size() >= 1, "student-t location must be non-empty");
                       require(t.df > 0.0, "student-t degrees of freedom must be positive");
                       require(!std::holds_alternative<FullCovariance>(t.scale),
                               "student-t scale must be isotropic, diagonal or block2x2");
                       detail::CovarianceFactor(t.scale, t.location.size());
                   },
                   [](const TruncatedNormal& t) {
                       require(t.scale > 0.0, "truncated normal scale must be positive");
                       require(t.low < t.high, "truncated normal requires low < high");
                   },
                   [](const Mixture& m) {
                       require(!m.components.empty(), "mixture needs at least one component");
                       require(m.weights.size() == m.components.size(),
                               "mixture weights and components differ in length");
                       double total = 0.0;
                       for (double w : m.weights) {
                           require(w > 0.0, "mixture weights must be positive");
                           total += w;
                       }
                       require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
                       const Index d = dimension(m.components.front());
                       for (const auto& c : m.components) {
                           validate(c);
                           if (dimension(c) != d) throw DimensionMismatch("mixture component", d, dimension(c));
                       }
                   },
               },
               spec.value);
}

// ---------------------------------------------------------------------------
// Log-density
// ---------------------------------------------------------------------------

/// Log-density prepared once for repeated evaluation (factorisations cached).
class LogDensity {
public:
    explicit LogDensity(const DistributionSpec& spec) : dim_(dimension(spec)) {
        validate(spec);
        std::visit(overloaded{
                       [&](const Gaussian& g) {
                           auto f = std::make_shared<detail::CovarianceFactor>(g.cov, dim_);
                           const double norm = -0.5 * (static_cast<double>(dim_) * kLogTwoPi + f->log_det());
                           eval_ = [f, mean = g.mean, norm](const Eigen::Ref<const Vector>& x) {
                               return norm - 0.5 * f->quad_form(x - mean);
                           };
                       },
                       [&](const Cauchy& c) {
                           eval_ = [c](const Eigen::Ref<const Vector>& x) {
                               const auto z = ((x - c.location).array() / c.scale.array());
                               return -(static_cast<double>(x.size()) * std::log(std::numbers::pi) +
                                        c.scale.array().log().sum() + z.square().log1p().sum());
                           };
                       },
                       [&](const StudentT& t) {
                           auto f = std::make_shared<detail::CovarianceFactor>(t.scale, dim_);
                           const double d = static_cast<double>(dim_);
                           const double norm = std::lgamma(0.5 * (t.df + d)) - std::lgamma(0.5 * t.df) -
                                               0.5 * d * std::log(t.df * std::numbers::pi) - 0.5 * f->log_det();
                           eval_ = [f, loc = t.location, df = t.df, d, norm](const Eigen::Ref<const Vector>& x) {
                               return norm - 0.5 * (df + d) * std::log1p(f->quad_form(x - loc) / df);
                           };
                       },
                       [&](const TruncatedNormal& t) {
                           const double log_mass =
                               detail::log_normal_mass((t.low - t.loc) / t.scale, (t.high - t.loc) / t.scale);
                           const double norm = -0.5 * kLogTwoPi - std::log(t.scale) - log_mass;
                           eval_ = [t, norm](const Eigen::Ref<const Vector>& x) {
                               const double v = x[0];
                               if (!(v >= t.low && v <= t.high)) return kNegInf;
                               const double z = (v - t.loc) / t.scale;
                               return norm - 0.5 * z * z;
                           };
                       },
                       [&](const Mixture& m) {
                           std::vector<LogDensity> parts;
                           Vector log_w(static_cast<Index>(m.weights.size()));
                           for (std::size_t k = 0; k < m.components.size(); ++k) {
                               parts.emplace_back(m.components[k]);
                               log_w[static_cast<Index>(k)] = std::log(m.weights[k]);
                           }
                           eval_ = [parts = std::move(parts), log_w](const Eigen::Ref<const Vector>& x) {
                               Vector terms(log_w.size());
                               for (Index k = 0; k < log_w.size(); ++k)
                                   terms[k] = add_log(log_w[k], parts[static_cast<std::size_t>(k)](x));
                               return log_sum_exp(terms);
                           };
                       },
                   },
                   spec.value);
    }

    Index dim() const { return dim_; }

    double operator()(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != dim_) throw DimensionMismatch("log_density", dim_, x.size());
        return eval_(x);
    }

    /// Log-density of every row of `x`.
    Vector rows(const Matrix& x) const {
        if (x.cols() != dim_) throw DimensionMismatch("log_density", dim_, x.cols());
        Vector out(x.rows());
        Vector row(dim_);
        for (Index i = 0; i < x.rows(); ++i) {
            row = x.row(i).transpose();
            out[i] = eval_(row);
        }
        return out;
    }

private:
    Index dim_;
    std::function<double(const Eigen::Ref<const Vector>&)> eval_;
};

inline double log_density(const DistributionSpec& spec, const Eigen::Ref<const Vector>& x) {
    return LogDensity(spec)(x);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline void sample_into(const DistributionSpec& spec, Eigen::Ref<Matrix> out, Rng& rng, std::uint64_t seed);

inline void sample_truncated(const TruncatedNormal& t, Eigen::Ref<Matrix> out, Rng& rng) {
    // Inverse CDF on the truncated uniform interval, evaluated in the lower tail
    // (mirrored when the window sits above the location) to keep precision.
    double a = (t.low - t.loc) / t.scale;
    double b = (t.high - t.loc) / t.scale;
    const bool mirrored = a > 0.0;
    if (mirrored) std::tie(a, b) = std::pair{-b, -a};
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    for (Index i = 0; i < out.rows(); ++i) {
        const double u = pa + (pb - pa) * uniform_open(rng);
        double z = normal_quantile(std::clamp(u, std::numeric_limits<double>::min(), 1.0));
        if (!std::isfinite(z)) z = a;
        z = std::clamp(z, a, b);
        if (mirrored) z = -z;
        out(i, 0) = std::clamp(t.loc + t.scale * z, t.low, t.high);
    }
}

inline void sample_into(const DistributionSpec& spec, Eigen::Ref<Matrix> out, Rng& rng, std::uint64_t seed) {
    const Index n = out.rows();
    const Index d = out.cols();
    std::visit(overloaded{
                   [&](const Gaussian& g) {
                       CovarianceFactor f(g.cov, d);
                       NormalSource normal(rng);
                       Vector z(d);
                       for (Index i = 0; i < n; ++i) {
                           for (Index j = 0; j < d; ++j) z[j] = normal();
                           f.apply(z);
                           out.row(i) = (z + g.mean).transpose();
                       }
                   },
                   [&](const Cauchy& c) {
                       for (Index i = 0; i < n; ++i)
                           for (Index j = 0; j < d; ++j)
                               out(i, j) = c.location[j] +
                                           c.scale[j] * std::tan(std::numbers::pi * (uniform_open(rng) - 0.5));
                   },
                   [&](const StudentT& t) {
                       CovarianceFactor f(t.scale, d);
                       NormalSource normal(rng);
                       Vector z(d);
                       for (Index i = 0; i < n; ++i) {
                           for (Index j = 0; j < d; ++j) z[j] = normal();
                           f.apply(z);
                           // chi^2_nu = 2 * Gamma(nu / 2, 1)
                           const double chi2 = 2.0 * sample_gamma(0.5 * t.df, rng, normal);
                           out.row(i) = (z * std::sqrt(t.df / chi2) + t.location).transpose();
                       }
                   },
                   [&](const TruncatedNormal& t) { sample_truncated(t, out, rng); },
                   [&](const Mixture& m) {
                       std::vector<double> cum(m.weights.size());
                       std::partial_sum(m.weights.begin(), m.weights.end(), cum.begin());
                       std::vector<std::size_t> label(static_cast<std::size_t>(n));
                       std::vector<Index> counts(m.weights.size(), 0);
                       for (Index i = 0; i < n; ++i) {
                           const double u = uniform_open(rng) * cum.back();
                           auto k = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
                           k = std::min(k, cum.size() - 1);
                           label[static_cast<std::size_t>(i)] = k;
                           ++counts[k];
                       }
                       std::vector<Index> cursor(m.weights.size(), 0);
                       std::vector<Matrix> draws(m.weights.size());
                       for (std::size_t k = 0; k < m.weights.size(); ++k) {
                           draws[k].resize(counts[k], d);
                           Rng sub = make_rng(seed, 1000 + k);
                           sample_into(m.components[k], draws[k], sub, mix_seed(seed, 1000 + k));
                       }
                       for (Index i = 0; i < n; ++i) {
                           const auto k = label[static_cast<std::size_t>(i)];
                           out.row(i) = draws[k].row(cursor[k]++);
                       }
                   },
               },
               spec.value);
}

}  // namespace detail

/// n i.i.d. rows from `spec`; bit-identical for identical (spec, n, seed).
inline Matrix sample(const DistributionSpec& spec, Index n, std::uint64_t seed) {
    require(n >= 1, "sample count must be at least 1");
    validate(spec);
    Matrix out(n, dimension(spec));
    Rng rng = make_rng(seed);
    detail::sample_into(spec, out, rng, seed);
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form Gaussian quantities
// ---------------------------------------------------------------------------

/// KL(p || q) between two Gaussians.
inline double gaussian_kl(const Gaussian& p, const Gaussian& q) {
    const Index d = p.mean.size();
    if (q.mean.size() != d) throw DimensionMismatch("gaussian_kl", d, q.mean.size());
    const detail::CovarianceFactor fp(p.cov, d);
    const detail::CovarianceFactor fq(q.cov, d);
    const Matrix sp = fp.dense();
    const Matrix sq = fq.dense();
    if (p.mean == q.mean && sp == sq) return 0.0;
    Eigen::LLT<Matrix> lq(sq);
    const double trace = lq.solve(sp).trace();
    const Vector diff = q.mean - p.mean;
    const double maha = diff.dot(lq.solve(diff));
    const double kl = 0.5 * (trace + maha - static_cast<double>(d) + fq.log_det() - fp.log_det());
    return std::max(kl, 0.0);
}

inline double gaussian_kl(const DistributionSpec& p, const DistributionSpec& q) {
    const auto* gp = std::get_if<Gaussian>(&p.value);
    const auto* gq = std::get_if<Gaussian>(&q.value);
    if (!gp || !gq) throw InvalidArgument("gaussian_kl requires two Gaussian specs");
    return gaussian_kl(*gp, *gq);
}

/// Correlation giving mutual information `target_mi` across `blocks` 2x2 blocks,
/// inverting I = -blocks/2 * ln(1 - rho^2).
inline double rho_for_target_mi(Index blocks, double target_mi) {
    require(blocks >= 1, "block count must be positive");
    require(target_mi > 0.0, "target mutual information must be positive");
    return std::sqrt(-std::expm1(-2.0 * target_mi / static_cast<double>(blocks)));
}

}  // namespace mdre
