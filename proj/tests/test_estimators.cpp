#include <gtest/gtest.h>

#include <algorithm>

#include "mdre/harness.hpp"

using namespace mdre;

namespace {

// The exact Gaussian log-density written as a quadratic score: the model family
// contains the true log-ratio, so a hand-built "fit" gives an exact readout.
QuadraticScore gaussian_log_density_score(double mean, double sd) {
    const double prec = 1.0 / (sd * sd);
    Matrix w1(1, 1);
    w1 << -0.5 * prec;
    const Vector w2 = Vector::Constant(1, mean * prec);
    const double b = -0.5 * mean * mean * prec - std::log(sd) - 0.5 * kLogTwoPi;
    return QuadraticScore(w1, w2, b);
}

FittedEstimator<QuadraticScore> exact_fit(double mp, double sp, double mq, double sq) {
    FittedEstimator<QuadraticScore> f;
    f.method = Method::mdre;
    f.models.emplace_back(std::vector<QuadraticScore>{gaussian_log_density_score(mp, sp), gaussian_log_density_score(mq, sq)});
    return f;
}

using TabularSet = ScoreSet<TabularScore>;
using QuadraticSet = ScoreSet<QuadraticScore>;

// Dyadic tables: every logit and difference is exactly representable.
TabularSet dyadic_tabular(Index c) {
    std::vector<TabularScore> s;
    for (Index k = 0; k < c; ++k) {
        const double a = static_cast<double>(k);
        s.emplace_back((Vector(4) << 0.5 * a, 1.0 - 0.25 * a, 1.75, -2.0 + 0.125 * a).finished());
    }
    return TabularSet(std::move(s));
}

FittedEstimator<TabularScore> as_fit(TabularSet set) {
    FittedEstimator<TabularScore> f;
    f.method = Method::mdre;
    f.models.push_back(std::move(set));
    return f;
}

}  // namespace

TEST(MdreLogRatio, ExactGaussianScoresGiveTrueRatio) {
    const auto fit = exact_fit(-1.0, 0.08, 2.0, 0.15);
    const DistributionSpec p = normal_1d(-1.0, 0.08);
    const DistributionSpec q = normal_1d(2.0, 0.15);
    for (double x : {-3.0, -1.0, 0.0, 1.5, 4.0}) {
        const Vector v = Vector::Constant(1, x);
        EXPECT_NEAR(mdre_log_ratio(fit, v), log_density(p, v) - log_density(q, v), 1e-9 * (1 + std::abs(x) * 1e3));
    }
}

TEST(MdreLogRatio, SymmetricFitIsFlat) {
    const Matrix a = sample(normal_1d(0.0, 1.0), 5000, 1);
    const Matrix b = sample(normal_1d(0.0, 1.0), 5000, 2);
    OptimizerConfig opt;
    const auto fit = fit_multiclass(ClassedSamples{{a, b, sample(cauchy_1d(0, 1), 5000, 3)}}, QuadraticScore(1), opt);
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) EXPECT_LT(std::abs(mdre_log_ratio(fit, Vector::Constant(1, x))), 0.2);
}

TEST(MdreLogRatio, Gap3TracksTruthOnGrid) {
    const auto cfg = *find_preset("kl1d_gap3");
    const auto data = prepare_data(cfg, 0);
    const auto fit = fit_experiment(cfg, data, 0);
    const DistributionSpec p = normal_1d(-1.0, 0.08);
    const DistributionSpec q = normal_1d(2.0, 0.15);
    // Union of the 4-sigma supports of p and q, inside the (-12, 12) grid.
    const Vector grid = Vector::LinSpaced(2401, -12.0, 12.0);
    double total = 0.0;
    Index n = 0;
    for (Index i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        if (std::abs(x + 1.0) > 4 * 0.08 && std::abs(x - 2.0) > 4 * 0.15) continue;
        const Vector v = Vector::Constant(1, x);
        total += std::abs(mdre_log_ratio(fit, v) - (log_density(p, v) - log_density(q, v)));
        ++n;
    }
    ASSERT_GT(n, 10);
    EXPECT_LT(total / static_cast<double>(n), 5.0);
}

TEST(PairLogRatio, RejectsSameClassAndBadIndex) {
    const auto fit = as_fit(dyadic_tabular(3));
    const Vector x = Vector::Zero(1);
    EXPECT_THROW(pair_log_ratio(fit, 1, 1, x), InvalidArgument);
    EXPECT_THROW(pair_log_ratio(fit, 0, 3, x), InvalidArgument);
    EXPECT_THROW(pair_log_ratio(fit, -1, 0, x), InvalidArgument);
}

TEST(PairLogRatio, AntisymmetryIsExact) {
    Rng rng = make_rng(4);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 200; ++t) {
        std::vector<QuadraticScore> s;
        for (int k = 0; k < 3; ++k) {
            Matrix w1(2, 2);
            w1 << nd(rng), nd(rng), nd(rng), nd(rng);
            s.emplace_back(w1, (Vector(2) << nd(rng), nd(rng)).finished(), nd(rng));
        }
        FittedEstimator<QuadraticScore> fit;
        fit.models.emplace_back(s);
        const Vector x = (Vector(2) << nd(rng), nd(rng)).finished();
        for (Index i = 0; i < 3; ++i)
            for (Index j = 0; j < 3; ++j)
                if (i != j) EXPECT_EQ(pair_log_ratio(fit, i, j, x), -pair_log_ratio(fit, j, i, x));
    }
}

TEST(PairLogRatio, TelescopingIsExactForExactLogits) {
    const auto fit = as_fit(dyadic_tabular(3));
    for (Index s = 0; s < 4; ++s) {
        const Vector x = Vector::Constant(1, static_cast<double>(s));
        EXPECT_EQ(pair_log_ratio(fit, 0, 2, x) + pair_log_ratio(fit, 2, 1, x), pair_log_ratio(fit, 0, 1, x));
    }
}

TEST(PairLogRatio, TelescopingWithinRoundingOnRandomValues) {
    Rng rng = make_rng(6);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 200; ++t) {
        Vector v(3);
        v << nd(rng), nd(rng), nd(rng);
        std::vector<TabularScore> s;
        for (Index k = 0; k < 3; ++k) s.emplace_back(Vector::Constant(1, v[k]));
        const auto fit = as_fit(TabularSet(std::move(s)));
        const Vector x = Vector::Zero(1);
        const double lhs = pair_log_ratio(fit, 0, 2, x) + pair_log_ratio(fit, 2, 1, x);
        EXPECT_LE(std::abs(lhs - pair_log_ratio(fit, 0, 1, x)), 4 * std::numeric_limits<double>::epsilon() * v.cwiseAbs().maxCoeff());
    }
}

TEST(TreLogRatio, ZeroLinksGiveZeroAndSumsLinks) {
    FittedEstimator<QuadraticScore> tre;
    tre.method = Method::tre;
    for (int k = 0; k < 4; ++k) tre.models.push_back(QuadraticSet::zeros(2, Index{1}));
    EXPECT_EQ(tre_log_ratio(tre, Vector::Constant(1, 0.7)), 0.0);

    tre.models.clear();
    tre.models.emplace_back(std::vector<QuadraticScore>{gaussian_log_density_score(-1, 0.1), gaussian_log_density_score(0, 0.15)});
    tre.models.emplace_back(std::vector<QuadraticScore>{gaussian_log_density_score(0, 0.15), gaussian_log_density_score(1, 0.2)});
    const auto direct = exact_fit(-1, 0.1, 1, 0.2);
    for (double x : {-1.0, 0.0, 0.5})
        EXPECT_NEAR(tre_log_ratio(tre, Vector::Constant(1, x)), mdre_log_ratio(direct, Vector::Constant(1, x)), 1e-9);
    EXPECT_THROW(tre_log_ratio(direct, Vector::Zero(1)), InvalidArgument);
    EXPECT_THROW(mdre_log_ratio(tre, Vector::Zero(1)), InvalidArgument);
}

TEST(EstimateKl, ZeroRatioGivesZero) {
    FittedEstimator<QuadraticScore> f;
    f.models.push_back(QuadraticSet::zeros(2, Index{1}));
    const auto e = estimate_kl(LogRatioFunction<QuadraticScore>(f), sample(normal_1d(0, 1), 100, 1));
    EXPECT_EQ(e.mean, 0.0);
    EXPECT_EQ(e.standard_error, 0.0);
    EXPECT_THROW(estimate_kl(LogRatioFunction<QuadraticScore>(f), Matrix::Zero(1, 1)), InvalidArgument);
}

TEST(EstimateKl, ExactRatioRecoversTruth) {
    const auto fit = exact_fit(-1.0, 0.08, 2.0, 0.15);
    const auto e = estimate_kl(LogRatioFunction<QuadraticScore>(fit), sample(normal_1d(-1.0, 0.08), 100000, 3));
    EXPECT_NEAR(e.mean, 200.27, 3.0 * e.standard_error + 0.005);
}

TEST(EstimateKl, StandardErrorScalesAsInverseRootN) {
    const auto fit = exact_fit(-1.0, 0.3, 1.0, 0.5);
    std::vector<double> se;
    for (Index n : {1000, 10000, 100000})
        se.push_back(estimate_kl(LogRatioFunction<QuadraticScore>(fit), sample(normal_1d(-1.0, 0.3), n, 7)).standard_error);
    EXPECT_NEAR(se[0] / se[1], std::sqrt(10.0), 0.15 * std::sqrt(10.0));
    EXPECT_NEAR(se[1] / se[2], std::sqrt(10.0), 0.15 * std::sqrt(10.0));
}

TEST(EstimateKl, Gap4Fit) {
    auto c = *find_preset("kl1d_gap4");
    const auto r = run(c, 0);
    EXPECT_NEAR(r.estimate, 355.82, 12.0);
}

TEST(ProductOfMarginals, PreservesColumnsAndBreaksCoupling) {
    const Index n = 20000;
    Matrix joint(n, 2);
    joint.col(0) = sample(normal_1d(0, 1), n, 1);
    joint.col(1) = joint.col(0);  // u = v
    for (auto mode : {MarginalMode::per_coordinate, MarginalMode::halves}) {
        const Matrix pm = product_of_marginals(joint, 5, mode);
        for (Index j = 0; j < 2; ++j) {
            std::vector<double> a(joint.col(j).data(), joint.col(j).data() + n);
            std::vector<double> b(pm.col(j).data(), pm.col(j).data() + n);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            EXPECT_EQ(a, b);
        }
        const Vector u = pm.col(0).array() - pm.col(0).mean();
        const Vector v = pm.col(1).array() - pm.col(1).mean();
        EXPECT_LT(std::abs(u.dot(v) / std::sqrt(u.squaredNorm() * v.squaredNorm())), 4.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST(ProductOfMarginals, IndependentJointUnchangedInDistribution) {
    const Index n = 20000;
    const Matrix joint = sample(standard_gaussian(2), n, 3);
    const Matrix pm = product_of_marginals(joint, 4);
    auto cross = [&](const Matrix& m) {
        const Vector u = m.col(0).array() - m.col(0).mean();
        const Vector v = m.col(1).array() - m.col(1).mean();
        return u.dot(v) / static_cast<double>(n);
    };
    // Each cross-covariance has SE about 1/sqrt(n); the difference about sqrt(2/n).
    EXPECT_LT(std::abs(cross(joint) - cross(pm)), 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
    EXPECT_THROW(product_of_marginals(Matrix(0, 2), 1), InvalidArgument);
    EXPECT_THROW(product_of_marginals(Matrix::Zero(3, 3), 1, MarginalMode::halves), InvalidArgument);
}

TEST(EstimateMi, IndependentJointGivesZero) {
    const Index n = 10000;
    const Matrix joint = sample(standard_gaussian(4), n, 1);
    const Matrix pm = product_of_marginals(sample(standard_gaussian(4), n, 2), 3);
    OptimizerConfig opt;
    opt.epochs = 300;
    const auto fit = fit_bdre(joint, pm, QuadraticScore(4), opt);
    const auto e = estimate_mi(fit, sample(standard_gaussian(4), n, 4));
    EXPECT_LT(std::abs(e.mean), 0.5);
}
