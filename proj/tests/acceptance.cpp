// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "mdre/harness.hpp"
#include "support.hpp"

using namespace mdre;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [miss]");
    }
};

Index jobs() { return std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency())); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct PresetRun {
    double mean = 0.0;
    double truth = 0.0;
    double runtime = 0.0;
    std::vector<ResultRecord> records;
};

PresetRun run_preset(const std::string& name) {
    const auto c = *find_preset(name);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RunFailure> failures;
    PresetRun r;
    r.records = run_all({c}, jobs(), nullptr, &failures);
    r.runtime = seconds_since(t0);
    for (const auto& f : failures) std::cerr << "  " << f.name << " run " << f.run_index << ": " << f.message << '\n';
    if (r.records.empty()) {
        r.mean = std::nan("");
        return r;
    }
    for (const auto& rec : r.records) r.mean += rec.estimate;
    r.mean /= static_cast<double>(r.records.size());
    r.truth = r.records.front().true_value;
    std::cerr << "  " << name << ": mean " << format_number(r.mean) << " over " << r.records.size() << " runs, truth "
              << format_number(r.truth) << ", " << format_number(r.runtime) << " s\n";
    return r;
}

std::string num(double v) { return format_number(v); }

Verdict criterion1() {
    Verdict v;
    const auto r = run_preset("kl1d_gap3");
    v.check(std::abs(r.mean - 200.27) <= 10.0, "MDRE mean " + num(r.mean) + " vs 200.27 +- 10");
    v.check(r.runtime <= 120.0, "runtime " + num(r.runtime) + " s <= 120 s");
    return v;
}

Verdict criterion2() {
    Verdict v;
    const auto r = run_preset("kl1d_gap4");
    v.check(std::abs(r.mean - 355.82) <= 15.0, "MDRE mean " + num(r.mean) + " vs 355.82 +- 15");
    v.check(r.runtime <= 120.0, "runtime " + num(r.runtime) + " s <= 120 s");
    return v;
}

Verdict criterion3() {
    Verdict v;
    const double truth = 200.27;
    const auto m = run_preset("kl1d_gap3");
    const auto b = run_preset("kl1d_gap3_bdre");
    const auto t = run_preset("kl1d_gap3_tre");
    const double em = std::abs(m.mean - truth);
    v.check(b.mean < 60.0, "BDRE " + num(b.mean) + " < 60");
    v.check(t.mean >= 100.0 && t.mean <= 170.0, "TRE " + num(t.mean) + " in [100, 170]");
    v.check(std::abs(b.mean - truth) > em, "BDRE error " + num(std::abs(b.mean - truth)) + " > MDRE error " + num(em));
    v.check(std::abs(t.mean - truth) > em, "TRE error " + num(std::abs(t.mean - truth)) + " > MDRE error " + num(em));
    return v;
}

// Per-class accuracy of the symmetric dim-40 classifier on a fresh validation set.
std::string dim40_accuracy_band() {
    auto c = *find_preset("mi_dim40_sym");
    const auto data = prepare_data(c, c.seed);
    const auto fit = fit_experiment(c, data, c.seed);
    auto fresh = c;
    fresh.samples_per_class = 5000;
    const auto val = prepare_data(fresh, c.seed + 1000);
    ClassedSamples classed{{val.p, val.q}};
    for (const auto& m : val.auxiliary) classed.classes.push_back(m);
    const auto band = accuracy_band(fit.models.front(), classed);
    std::ostringstream os;
    os << "validation accuracy";
    for (Index k = 0; k < band.accuracy.size(); ++k) os << (k ? "/" : " ") << num(band.accuracy[k]);
    os << " (" << to_string(band.verdict) << ")";
    return os.str();
}

Verdict criterion4() {
    Verdict v;
    const auto r = run_preset("mi_dim40_sym");
    v.check(r.mean >= 17.5 && r.mean <= 21.0, "MDRE MI " + num(r.mean) + " in [17.5, 21]");
    v.check(r.runtime <= 600.0, "runtime " + num(r.runtime) + " s <= 600 s");
    std::cerr << "  mi_dim40_sym " << dim40_accuracy_band() << '\n';
    return v;
}

Verdict criterion5() {
    Verdict v;
    const auto m = run_preset("mi_dim40_shift");
    const auto b = run_preset("mi_dim40_shift_bdre");
    v.check(m.mean >= 90.0 && m.mean <= 135.0, "MDRE " + num(m.mean) + " in [90, 135]");
    v.check(b.mean < 50.0, "BDRE " + num(b.mean) + " < 50");
    return v;
}

Verdict criterion6() {
    Verdict v;
    const auto c = *find_preset("trunc_normal");
    const auto q = quadrature_kl_1d(c.p, c.q);
    v.check(std::abs(q.value - 50.65) <= 0.05, "quadrature " + num(q.value) + " vs 50.65 +- 0.05");
    const auto r = run_preset("trunc_normal");
    v.check(std::abs(r.mean - q.value) <= 5.0, "MDRE " + num(r.mean) + " within 5 of " + num(q.value));
    return v;
}

Verdict criterion7() {
    Verdict v;
    const auto rep = shift_diagnostic(*find_preset("shift_tre_vs_mdre"));
    const std::vector<std::string> denominators{"m1", "m2", "m3", "q"};
    double worst_link = 0.0;
    for (std::size_t k = 0; k < denominators.size(); ++k)
        worst_link = std::max(worst_link, rep.find("tre", "link_" + std::to_string(k + 1), denominators[k]).mean_abs_error);
    v.check(worst_link < 0.5, "worst TRE link error on its denominator " + num(worst_link) + " < 0.5");
    const double chain_p = rep.find("tre", "chain", "p").mean_abs_error;
    const double mdre_p = rep.find("mdre_aux", "p/q", "p").mean_abs_error;
    v.check(chain_p > mdre_p, "TRE chain error on p " + num(chain_p) + " > MDRE " + num(mdre_p));
    for (const char* from : {"p", "m", "q"}) {
        const double e = rep.find("mdre_aux", "p/q", from).mean_abs_error;
        v.check(e < 1.0, std::string("MDRE error on ") + from + " " + num(e) + " < 1");
    }
    return v;
}

// --- identity suite ---------------------------------------------------------

QuadraticScoreSet random_set(Index d, Index c, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 0.3);
    std::vector<QuadraticScore> s;
    for (Index k = 0; k < c; ++k) {
        Matrix w1(d, d);
        for (Index i = 0; i < w1.size(); ++i) w1.data()[i] = nd(rng);
        Vector w2(d);
        for (Index i = 0; i < d; ++i) w2[i] = nd(rng);
        s.emplace_back(w1, w2, nd(rng));
    }
    return QuadraticScoreSet(std::move(s));
}

ClassedSamples random_classes(Index d, Index c, Index n, std::uint64_t seed) {
    ClassedSamples data;
    for (Index k = 0; k < c; ++k)
        data.classes.push_back(sample(standard_gaussian(d, 0.3 * static_cast<double>(k)), n + k, mix_seed(seed, k)));
    return data;
}

Matrix exact_counts(const Vector& table, Index n) {
    std::vector<double> v;
    for (Index s = 0; s < table.size(); ++s)
        for (Index i = 0; i < static_cast<Index>(std::lround(table[s] * static_cast<double>(n))); ++i)
            v.push_back(static_cast<double>(s));
    return Eigen::Map<Matrix>(v.data(), static_cast<Index>(v.size()), 1);
}

Verdict criterion8() {
    Verdict v;
    Rng rng = make_rng(8);

    double worst_grad = 0.0;
    for (Index d : {1, 2, 5})
        for (Index c : {2, 3, 5})
            for (int rep = 0; rep < 3; ++rep) {
                const auto set = random_set(d, c, rng);
                const auto data = random_classes(d, c, 25, static_cast<std::uint64_t>(100 * d + 10 * c + rep));
                const Vector fd = mdre_test::central_difference(
                    [&](const Vector& t) {
                        auto s = set;
                        s.set_parameters(t);
                        return loss(s, data);
                    },
                    set.parameters());
                worst_grad = std::max(worst_grad, mdre_test::max_relative_error(loss_gradient(set, data), fd));
            }
    v.check(worst_grad < 1e-5, "gradient rel error " + num(worst_grad) + " < 1e-5");

    {
        const std::vector<Vector> tables{(Vector(5) << 0.1, 0.2, 0.3, 0.2, 0.2).finished(),
                                         (Vector(5) << 0.3, 0.3, 0.1, 0.2, 0.1).finished(),
                                         (Vector(5) << 0.2, 0.1, 0.1, 0.1, 0.5).finished()};
        ClassedSamples data;
        for (const auto& t : tables) data.classes.push_back(exact_counts(t, 100));
        OptimizerConfig opt;
        opt.epochs = 5000;
        opt.learning_rate = 0.05;
        const auto fit = fit_multiclass(data, TabularScore(5), opt);
        const auto oracle = exact_tabular_ratios(tables);
        double worst = 0.0;
        for (Index i = 0; i < 3; ++i)
            for (Index j = 0; j < 3; ++j)
                if (i != j)
                    for (Index s = 0; s < 5; ++s)
                        worst = std::max(worst, std::abs(pair_log_ratio(fit, i, j, Vector::Constant(1, double(s))) -
                                                         oracle.ratio(i, j)[s]));
        v.check(worst <= 1e-3, "tabular ratio error " + num(worst) + " <= 1e-3");
    }

    {
        // Dyadic parameters and inputs keep every logit exact.
        std::vector<QuadraticScore> scores;
        for (int k = 0; k < 3; ++k) {
            Matrix w1(2, 2);
            w1 << 0.5 * k, 0.25, 0.25, -0.75;
            scores.emplace_back(w1, (Vector(2) << 1.5 - k, 0.125).finished(), 0.375 * k);
        }
        const QuadraticScoreSet base(scores);
        bool shift_exact = true;
        bool antisym = true;
        bool telescope = true;
        for (double shift : {1.0, -3.5, 0.0625, 1024.0}) {
            std::vector<QuadraticScore> moved_scores;
            for (const auto& s : scores) moved_scores.emplace_back(s.w1(), s.w2(), s.b() + shift);
            const QuadraticScoreSet moved(moved_scores);
            for (double a : {-1.5, 0.0, 0.75, 2.0}) {
                const Vector x = (Vector(2) << a, 0.5 - a).finished();
                shift_exact = shift_exact && (base.class_log_probs(x).array() == moved.class_log_probs(x).array()).all();
                for (Index i = 0; i < 3; ++i)
                    for (Index j = 0; j < 3; ++j) {
                        antisym = antisym && base.log_ratio(i, j, x) == -base.log_ratio(j, i, x);
                        for (Index k = 0; k < 3; ++k)
                            telescope = telescope &&
                                        base.log_ratio(i, k, x) + base.log_ratio(k, j, x) == base.log_ratio(i, j, x);
                    }
            }
        }
        v.check(shift_exact, "logit shift leaves class probabilities bit-identical");
        v.check(antisym, "antisymmetry exact");
        v.check(telescope, "telescoping exact");
    }

    {
        double worst_norm = 0.0;
        double worst_ln_c = 0.0;
        for (Index c : {2, 3, 5, 8}) {
            const auto set = random_set(3, c, rng);
            const Matrix x = sample(standard_gaussian(3), 200, static_cast<std::uint64_t>(c));
            for (Index i = 0; i < x.rows(); ++i)
                worst_norm = std::max(worst_norm, std::abs(set.class_log_probs(x.row(i).transpose()).array().exp().sum() - 1.0));
            const auto zero = QuadraticScoreSet::zeros(c, Index{3});
            worst_ln_c = std::max(worst_ln_c, std::abs(loss(zero, random_classes(3, c, 50, 5)) - std::log(double(c))));
        }
        v.check(worst_norm <= 1e-12, "normalization error " + num(worst_norm) + " <= 1e-12");
        v.check(worst_ln_c <= 1e-12, "zero-init loss error " + num(worst_ln_c) + " <= 1e-12");
    }

    {
        const Index n = 10000;
        const Matrix a = sample(normal_1d(0.0, 1.0), n, 1);
        const Matrix b = sample(normal_1d(0.0, 1.0), n, 2);
        const Matrix m = sample(cauchy_1d(0.0, 1.0), n, 3);
        OptimizerConfig opt;
        opt.batch = 4096;
        opt.epochs = 300;
        const auto fit = fit_multiclass(ClassedSamples{{a, b, m}}, QuadraticScore(1), opt);
        const double kl = estimate_kl(LogRatioFunction<QuadraticScore>(fit), sample(normal_1d(0.0, 1.0), n, 4)).mean;
        v.check(std::abs(kl) < 0.3, "p = q KL " + num(kl) + " within 0.3 of 0");
    }
    return v;
}

Verdict criterion9() {
    Verdict v;
    {
        // Two classes, one outcome: (t0 + t1) / sqrt(2) is untouched by the likelihood.
        const ClassedSamples data{{Matrix::Zero(10, 1), Matrix::Zero(4, 1)}};
        HmcConfig cfg;
        cfg.step_size = 0.1;
        cfg.leapfrog_steps = 15;
        cfg.n_samples = 10000;
        cfg.prior_std = 1.5;
        cfg.seed = 3;
        const auto res = hmc_sample(data, TabularScoreSet::zeros(2, Index{1}), cfg);
        std::vector<double> s;
        for (std::size_t k = 0; k < res.draws.size(); k += 5) s.push_back((res.draws[k][0] + res.draws[k][1]) / std::sqrt(2.0));
        const boost::math::normal prior(0.0, cfg.prior_std);
        const double d = mdre_test::ks_statistic(s, [&](double x) { return boost::math::cdf(prior, x); });
        const double p = mdre_test::ks_p_value(d, s.size());
        v.check(p > 0.01, "pure-prior KS p-value " + num(p) + " > 0.01");
    }
    const auto r = hmc_uncertainty(*find_preset("hmc_uncertainty"));
    auto at = [&](double x) {
        Index best = 0;
        for (Index i = 1; i < r.grid.size(); ++i)
            if (std::abs(r.grid[i] - x) < std::abs(r.grid[best] - x)) best = i;
        return r.stats.stddev[best];
    };
    v.check(at(0.0) < at(-5.0) && at(0.0) < at(5.0),
            "std at 0 " + num(at(0.0)) + " below std at -5 " + num(at(-5.0)) + " and +5 " + num(at(5.0)));
    v.check(r.acceptance_rate >= 0.2 && r.acceptance_rate <= 0.99, "acceptance " + num(r.acceptance_rate) + " in [0.2, 0.99]");
    return v;
}

Verdict criterion10() {
    Verdict v;
    const auto bad = rnd_diagnostic(*find_preset("rnd_truncated_mixture"));
    const auto ok = rnd_diagnostic(*find_preset("rnd_nested_control"));
    v.check(bad.violations > 0, "truncated mixture violations " + std::to_string(bad.violations) + " > 0");
    v.check(ok.violations == 0, "nested control violations " + std::to_string(ok.violations) + " == 0");
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
        {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10},
    };
    int failed = 0;
    for (const auto& [id, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << "error: " << e.what();
        }
        if (!v.pass) ++failed;
        std::printf("criterion %2d: %s  (%s; %.1f s)\n", id, v.pass ? "PASS" : "FAIL", v.detail.str().c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
