#pragma once

// Experiment configuration, named presets, the sample -> fit -> estimate pipeline,
// diagnostics, and result records.

#include "mdre/estimators.hpp"
#include "mdre/hmc.hpp"
#include "mdre/oracle.hpp"
#include "mdre/serialization.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

namespace mdre {

enum class TaskKind { kl_1d, mi_highdim, robustness, shift_diagnostic, hmc_uncertainty, rnd_diagnostic };

inline std::string to_string(TaskKind t) {
    switch (t) {
        case TaskKind::kl_1d: return "kl_1d";
        case TaskKind::mi_highdim: return "mi_highdim";
        case TaskKind::robustness: return "robustness";
        case TaskKind::shift_diagnostic: return "shift_diagnostic";
        case TaskKind::hmc_uncertainty: return "hmc_uncertainty";
        case TaskKind::rnd_diagnostic: return "rnd_diagnostic";
    }
    return "?";
}

inline TaskKind parse_task(const std::string& s) {
    for (auto t : {TaskKind::kl_1d, TaskKind::mi_highdim, TaskKind::robustness, TaskKind::shift_diagnostic,
                   TaskKind::hmc_uncertainty, TaskKind::rnd_diagnostic})
        if (to_string(t) == s) return t;
    throw InvalidArgument("unknown task kind '" + s + "'");
}

/// Where q's training samples come from: q's own spec, or shuffled fresh draws from p
/// (the product of p's marginals, for MI tasks).
enum class QSource { spec, product_of_marginals };
enum class EvalMode { held_out, in_sample };

struct ExperimentConfig {
    std::string name;
    std::string description;
    TaskKind task = TaskKind::kl_1d;
    DistributionSpec p;
    DistributionSpec q;
    QSource q_source = QSource::spec;
    AuxiliaryScheme auxiliary = Overlapping{cauchy_1d(0.0, 1.0)};
    Method method = Method::mdre;
    std::vector<double> tre_alphas;
    MixVariant tre_variant = MixVariant::tre_skewed;
    Index samples_per_class = 100000;
    OptimizerConfig optimizer;
    EvalMode evaluation = EvalMode::held_out;
    Index eval_samples = 0;  // 0 means samples_per_class
    std::uint64_t seed = 0;
    Index runs = 1;
    std::optional<double> true_value;
    Index truth_samples = 1000000;  // Monte Carlo truth when nothing exact applies
    std::optional<double> lower_bound;
    std::optional<double> upper_bound;
    HmcConfig hmc;
    double grid_lo = -6.0;  // evaluation grid for the HMC task
    double grid_hi = 6.0;
    Index grid_points = 121;
    bool extended = false;

    void validate() const {
        require(samples_per_class >= 100, "samples per class must be at least 100");
        require(runs >= 1, "runs must be at least 1");
        require(eval_samples == 0 || eval_samples >= 2, "evaluation needs at least two samples");
        mdre::validate(p);
        if (q_source == QSource::spec) {
            mdre::validate(q);
            if (dimension(p) != dimension(q)) throw DimensionMismatch("q spec", dimension(p), dimension(q));
        }
        mdre::validate(auxiliary);
        optimizer.validate();
        hmc.validate();
        require(grid_points >= 2 && grid_lo < grid_hi, "evaluation grid must be a non-empty interval");
    }
};

inline Json to_json(const ExperimentConfig& c) {
    Json j{{"name", c.name},
           {"task", to_string(c.task)},
           {"p", to_json(c.p)},
           {"q_source", c.q_source == QSource::spec ? "spec" : "product_of_marginals"},
           {"auxiliary", to_json(c.auxiliary)},
           {"method", to_string(c.method)},
           {"tre", Json{{"alphas", c.tre_alphas}, {"variant", to_string(c.tre_variant)}}},
           {"samples_per_class", c.samples_per_class},
           {"optimizer", to_json(c.optimizer)},
           {"evaluation", Json{{"mode", c.evaluation == EvalMode::held_out ? "held_out" : "in_sample"},
                               {"samples", c.eval_samples}}},
           {"seed", c.seed},
           {"runs", c.runs},
           {"truth_samples", c.truth_samples},
           {"hmc", to_json(c.hmc)},
           {"grid", Json{{"lo", c.grid_lo}, {"hi", c.grid_hi}, {"points", c.grid_points}}},
           {"extended", c.extended}};
    if (c.q_source == QSource::spec) j["q"] = to_json(c.q);
    if (c.true_value) j["true_value"] = *c.true_value;
    Json bounds = Json::object();
    if (c.lower_bound) bounds["lower"] = *c.lower_bound;
    if (c.upper_bound) bounds["upper"] = *c.upper_bound;
    j["bounds"] = bounds;
    if (!c.description.empty()) j["description"] = c.description;
    return j;
}

/// Hash of the canonical config document.
inline std::string config_hash_hex(const ExperimentConfig& c) { return hex_hash(config_hash(to_json(c))); }

inline std::optional<ExperimentConfig> find_preset(const std::string& name);

/// Reads a config document. A "preset" key starts from that preset; every other key
/// present overrides it.
inline ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig c;
    if (j.contains("preset")) {
        const auto name = j.at("preset").get<std::string>();
        auto base = find_preset(name);
        if (!base) throw InvalidArgument("unknown preset '" + name + "'");
        c = *base;
    }
    c.name = j.value("name", c.name);
    c.description = j.value("description", c.description);
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    if (j.contains("p")) c.p = spec_from_json(j.at("p"));
    if (j.contains("q")) c.q = spec_from_json(j.at("q"));
    if (j.contains("q_source")) {
        const auto s = j.at("q_source").get<std::string>();
        if (s != "spec" && s != "product_of_marginals") throw InvalidArgument("unknown q_source '" + s + "'");
        c.q_source = s == "spec" ? QSource::spec : QSource::product_of_marginals;
    }
    if (j.contains("auxiliary")) c.auxiliary = scheme_from_json(j.at("auxiliary"));
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("tre")) {
        const auto& t = j.at("tre");
        c.tre_alphas = t.value("alphas", c.tre_alphas);
        if (t.contains("variant")) c.tre_variant = parse_mix_variant(t.at("variant").get<std::string>());
    }
    c.samples_per_class = j.value("samples_per_class", c.samples_per_class);
    if (j.contains("optimizer")) c.optimizer = optimizer_from_json(j.at("optimizer"), c.optimizer);
    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        if (e.contains("mode")) {
            const auto m = e.at("mode").get<std::string>();
            if (m != "held_out" && m != "in_sample") throw InvalidArgument("unknown evaluation mode '" + m + "'");
            c.evaluation = m == "held_out" ? EvalMode::held_out : EvalMode::in_sample;
        }
        c.eval_samples = e.value("samples", c.eval_samples);
    }
    c.seed = j.value("seed", c.seed);
    c.runs = j.value("runs", c.runs);
    if (j.contains("true_value")) c.true_value = j.at("true_value").get<double>();
    c.truth_samples = j.value("truth_samples", c.truth_samples);
    if (j.contains("bounds")) {
        const auto& b = j.at("bounds");
        if (b.contains("lower")) c.lower_bound = b.at("lower").get<double>();
        if (b.contains("upper")) c.upper_bound = b.at("upper").get<double>();
    }
    if (j.contains("hmc")) c.hmc = hmc_from_json(j.at("hmc"), c.hmc);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        c.grid_lo = g.value("lo", c.grid_lo);
        c.grid_hi = g.value("hi", c.grid_hi);
        c.grid_points = g.value("points", c.grid_points);
    }
    c.extended = j.value("extended", c.extended);
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// The Gaussian with p's marginals and no cross-dependence.
inline Gaussian marginal_product(const Gaussian& g) {
    const Index d = g.mean.size();
    const Matrix cov = detail::CovarianceFactor(g.cov, d).dense();
    return Gaussian{g.mean, Diagonal{cov.diagonal()}};
}

/// Distribution of c_p x_p + alpha x_q for independent Gaussian x_p, x_q, with
/// c_p = 1 - alpha (plain) or sqrt(1 - alpha^2) (tre_skewed).
inline Gaussian linear_mix_gaussian(const Gaussian& p, const Gaussian& q, double alpha, MixVariant variant) {
    const Index d = p.mean.size();
    if (q.mean.size() != d) throw DimensionMismatch("linear mix", d, q.mean.size());
    const double cp = variant == MixVariant::plain ? 1.0 - alpha : std::sqrt(1.0 - alpha * alpha);
    const Matrix cov = cp * cp * detail::CovarianceFactor(p.cov, d).dense() +
                       alpha * alpha * detail::CovarianceFactor(q.cov, d).dense();
    const Vector mean = cp * p.mean + alpha * q.mean;
    if (d == 1) return Gaussian{mean, Isotropic{cov(0, 0)}};
    return Gaussian{mean, FullCovariance{cov}};
}

inline constexpr std::uint64_t kTruthSeed = 0x5eed7;

struct TruthValue {
    double value = 0.0;
    std::string source;  // closed_form, quadrature, monte_carlo, config
};

/// KL(p || q) for the experiment (MI when q is the product of p's marginals).
inline TruthValue true_value(const ExperimentConfig& c) {
    if (c.true_value) return {*c.true_value, "config"};
    const auto* pg = std::get_if<Gaussian>(&c.p.value);
    if (c.q_source == QSource::product_of_marginals) {
        if (!pg) throw InvalidArgument("product-of-marginals truth needs a Gaussian p; set true_value");
        return {gaussian_kl(*pg, marginal_product(*pg)), "closed_form"};
    }
    const auto* qg = std::get_if<Gaussian>(&c.q.value);
    if (pg && qg) return {gaussian_kl(*pg, *qg), "closed_form"};
    if (dimension(c.p) == 1) {
        const auto r = quadrature_kl_1d(c.p, c.q);
        return {r.value, "quadrature"};
    }
    const auto mc = mc_kl(c.p, c.q, c.truth_samples, kTruthSeed);
    return {mc.estimate, "monte_carlo"};
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct ExperimentData {
    Matrix p;
    Matrix q;
    std::vector<Matrix> auxiliary;  // MDRE only
    Matrix eval;                    // samples from p used for the readout
};

inline std::uint64_t run_seed(const ExperimentConfig& c, Index run_index) {
    return c.seed + static_cast<std::uint64_t>(run_index);
}

inline ExperimentData prepare_data(const ExperimentConfig& c, std::uint64_t seed) {
    ExperimentData d;
    const Index n = c.samples_per_class;
    d.p = sample(c.p, n, mix_seed(seed, 1));
    if (c.q_source == QSource::spec) {
        d.q = sample(c.q, n, mix_seed(seed, 2));
    } else {
        d.q = product_of_marginals(sample(c.p, n, mix_seed(seed, 2)), mix_seed(seed, 3));
    }
    if (c.method == Method::mdre) d.auxiliary = build_auxiliary_samples(c.auxiliary, d.p, d.q, mix_seed(seed, 4));
    d.eval = c.evaluation == EvalMode::held_out ? sample(c.p, c.eval_samples > 0 ? c.eval_samples : n, mix_seed(seed, 9))
                                                : d.p;
    return d;
}

inline std::vector<std::string> mdre_labels(Index aux) {
    std::vector<std::string> labels{"p", "q"};
    for (Index k = 1; k <= aux; ++k) labels.push_back("m" + std::to_string(k));
    return labels;
}

inline FittedEstimator<QuadraticScore> fit_experiment(const ExperimentConfig& c, const ExperimentData& d,
                                                      std::uint64_t seed) {
    OptimizerConfig opt = c.optimizer;
    opt.seed = seed;
    const QuadraticScore prototype(d.p.cols());
    switch (c.method) {
        case Method::mdre: {
            ClassedSamples data{{d.p, d.q}};
            for (const auto& m : d.auxiliary) data.classes.push_back(m);
            return fit_multiclass(data, prototype, opt, {}, mdre_labels(static_cast<Index>(d.auxiliary.size())));
        }
        case Method::bdre: return fit_bdre(d.p, d.q, prototype, opt);
        case Method::tre: return fit_tre(d.p, d.q, c.tre_alphas, c.tre_variant, prototype, opt, mix_seed(seed, 4));
    }
    throw InvalidArgument("unknown method");
}

struct ResultRecord {
    std::string config_hash;
    std::string name;
    std::uint64_t seed = 0;
    std::string method;
    std::string task;
    double true_value = 0.0;
    double estimate = 0.0;
    double standard_error = 0.0;
    double runtime_s = 0.0;
    Vector train_accuracy;
    Vector validation_accuracy;
    std::string notes;
};

namespace detail {

inline std::string join_vector(const Vector& v) {
    std::string s;
    char buf[32];
    for (Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.3g", v[i]);
        if (i) s += '/';
        s += buf;
    }
    return s;
}

}  // namespace detail

/// Per-class accuracy verdict: too_easy when every class exceeds 95%, too_hard when
/// every class is below 50%.
enum class BandVerdict { too_easy, too_hard, in_band };

inline std::string to_string(BandVerdict v) {
    switch (v) {
        case BandVerdict::too_easy: return "too_easy";
        case BandVerdict::too_hard: return "too_hard";
        case BandVerdict::in_band: return "in_band";
    }
    return "?";
}

struct AccuracyBand {
    Vector accuracy;
    BandVerdict verdict = BandVerdict::in_band;
};

inline BandVerdict band_verdict(const Vector& accuracy) {
    require(accuracy.size() >= 1, "accuracy band needs at least one class");
    if ((accuracy.array() > 0.95).all()) return BandVerdict::too_easy;
    if ((accuracy.array() < 0.5).all()) return BandVerdict::too_hard;
    return BandVerdict::in_band;
}

template <ScoreFamily Score>
AccuracyBand accuracy_band(const ScoreSet<Score>& model, const ClassedSamples& validation) {
    require(validation.num_classes() == model.num_classes(), "validation split is missing or has the wrong classes");
    for (const auto& c : validation.classes) require(c.rows() > 0, "validation split is missing");
    AccuracyBand b;
    b.accuracy = class_accuracy(model, validation);
    b.verdict = band_verdict(b.accuracy);
    return b;
}

/// Runs one repetition of an estimation preset (task kl_1d, mi_highdim or robustness).
inline ResultRecord run(const ExperimentConfig& c, Index run_index = 0, std::optional<TruthValue> truth = {}) {
    c.validate();
    require(c.task == TaskKind::kl_1d || c.task == TaskKind::mi_highdim || c.task == TaskKind::robustness,
            "run() handles estimation tasks; use the diagnostic entry points for " + to_string(c.task));
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = run_seed(c, run_index);
    auto stage = [&](const char* name, auto&& fn) -> decltype(fn()) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw Error(c.name + ": " + name + " failed: " + e.what());
        }
    };
    const TruthValue tv = truth ? *truth : stage("ground truth", [&] { return true_value(c); });
    const auto data = stage("sampling", [&] { return prepare_data(c, seed); });
    const auto fit = stage("fitting", [&] { return fit_experiment(c, data, seed); });
    const auto est = stage("estimation", [&] { return estimate_kl(LogRatioFunction<QuadraticScore>(fit), data.eval); });

    ResultRecord r;
    r.config_hash = config_hash_hex(c);
    r.name = c.name;
    r.seed = seed;
    r.method = to_string(c.method);
    r.task = to_string(c.task);
    r.true_value = tv.value;
    r.estimate = est.mean;
    r.standard_error = est.standard_error;
    r.train_accuracy = fit.info.front().train_accuracy;
    r.validation_accuracy = fit.info.front().validation_accuracy;
    r.notes = "preset=" + c.name + ";truth=" + tv.source;
    if (c.method == Method::tre) r.notes += ";links=" + std::to_string(fit.models.size());
    if (c.method != Method::tre) r.notes += ";train_acc=" + detail::join_vector(r.train_accuracy);
    if (r.validation_accuracy.size() > 0)
        r.notes += ";val_acc=" + detail::join_vector(r.validation_accuracy) +
                   ";band=" + to_string(band_verdict(r.validation_accuracy));
    if (!std::isfinite(r.estimate)) r.notes += ";non_finite_estimate";
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

// ---------------------------------------------------------------------------
// Result output
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline const char* kCsvHeader = "config_hash,seed,method,task,true_value,estimate,stderr,runtime_s,notes";

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

inline std::string csv_line(const ResultRecord& r) {
    return csv_field(r.config_hash) + "," + std::to_string(r.seed) + "," + csv_field(r.method) + "," + csv_field(r.task) +
           "," + format_number(r.true_value) + "," + format_number(r.estimate) + "," + format_number(r.standard_error) + "," +
           format_number(r.runtime_s) + "," + csv_field(r.notes);
}

inline Json to_json(const ResultRecord& r) {
    auto num = [](double v) { return std::isfinite(v) ? Json(std::stod(format_number(v))) : Json(format_number(v)); };
    return Json{{"config_hash", r.config_hash},
                {"name", r.name},
                {"seed", r.seed},
                {"method", r.method},
                {"task", r.task},
                {"true_value", num(r.true_value)},
                {"estimate", num(r.estimate)},
                {"stderr", num(r.standard_error)},
                {"runtime_s", num(r.runtime_s)},
                {"train_accuracy", detail::to_json_vector(r.train_accuracy)},
                {"validation_accuracy", detail::to_json_vector(r.validation_accuracy)},
                {"notes", r.notes}};
}

enum class OutputFormat { csv, json };

inline OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw InvalidArgument("unknown format '" + s + "' (expected csv or json)");
}

/// Writes records in submission order as they become available; safe to call from
/// several threads.
class OrderedAppender {
public:
    OrderedAppender(std::ostream& out, OutputFormat format) : out_(out), format_(format) {
        if (format_ == OutputFormat::csv) out_ << kCsvHeader << '\n';
    }

    void put(std::size_t index, ResultRecord record) {
        std::lock_guard lock(mutex_);
        pending_.emplace(index, std::move(record));
        drain();
    }

    /// Marks `index` as produced without a record (e.g. a failed run).
    void skip(std::size_t index) {
        std::lock_guard lock(mutex_);
        skipped_.insert(index);
        pending_.emplace(index, ResultRecord{});
        drain();
    }

    void finish() {
        std::lock_guard lock(mutex_);
        if (format_ == OutputFormat::json) out_ << json_.dump(2) << '\n';
        out_.flush();
    }

private:
    void drain() {
        while (!pending_.empty() && pending_.begin()->first == next_) {
            if (!skipped_.count(next_)) write(pending_.begin()->second);
            pending_.erase(pending_.begin());
            ++next_;
        }
    }

    void write(const ResultRecord& r) {
        if (format_ == OutputFormat::csv) {
            out_ << csv_line(r) << '\n';
            out_.flush();
        } else {
            json_.push_back(to_json(r));
        }
    }

    std::ostream& out_;
    OutputFormat format_;
    std::mutex mutex_;
    std::map<std::size_t, ResultRecord> pending_;
    std::set<std::size_t> skipped_;
    std::size_t next_ = 0;
    Json json_ = Json::array();
};

struct RunFailure {
    std::string name;
    Index run_index;
    std::string message;
};

/// Executes every run of every config on up to `jobs` threads. Records are handed
/// to `appender` in config order, then run order. Ground truth is computed once per config.
inline std::vector<ResultRecord> run_all(const std::vector<ExperimentConfig>& configs, Index jobs,
                                         OrderedAppender* appender = nullptr, std::vector<RunFailure>* failures = nullptr) {
    struct Job {
        std::size_t config;
        Index run;
    };
    std::vector<Job> work;
    for (std::size_t i = 0; i < configs.size(); ++i)
        for (Index r = 0; r < configs[i].runs; ++r) work.push_back({i, r});

    std::vector<std::optional<TruthValue>> truths(configs.size());
    std::vector<std::once_flag> truth_once(configs.size());
    std::vector<std::optional<ResultRecord>> results(work.size());
    std::vector<std::optional<RunFailure>> errors(work.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t w = next++; w < work.size(); w = next++) {
            const auto& job = work[w];
            const auto& cfg = configs[job.config];
            try {
                std::call_once(truth_once[job.config], [&] { truths[job.config] = true_value(cfg); });
                if (!truths[job.config]) throw Error(cfg.name + ": ground truth unavailable");
                results[w] = run(cfg, job.run, truths[job.config]);
                if (appender) appender->put(w, *results[w]);
            } catch (const std::exception& e) {
                errors[w] = RunFailure{cfg.name, job.run, e.what()};
                if (appender) appender->skip(w);
            }
        }
    };
    const auto n_threads = static_cast<std::size_t>(std::max<Index>(1, std::min<Index>(jobs, static_cast<Index>(work.size()))));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    std::vector<ResultRecord> out;
    for (std::size_t w = 0; w < work.size(); ++w) {
        if (results[w]) out.push_back(*results[w]);
        if (errors[w] && failures) failures->push_back(*errors[w]);
    }
    return out;
}

struct BoundCheck {
    std::string name;
    double mean_estimate = 0.0;
    double true_value = 0.0;
    bool within = true;
    std::string bound_text;
};

/// Mean estimate per config compared with its acceptance bounds (configs without
/// bounds always pass).
inline std::vector<BoundCheck> check_bounds(const std::vector<ExperimentConfig>& configs,
                                            const std::vector<ResultRecord>& records) {
    std::vector<BoundCheck> out;
    for (const auto& c : configs) {
        BoundCheck b;
        b.name = c.name;
        double sum = 0.0;
        Index n = 0;
        for (const auto& r : records)
            if (r.name == c.name) {
                sum += r.estimate;
                b.true_value = r.true_value;
                ++n;
            }
        b.mean_estimate = n > 0 ? sum / static_cast<double>(n) : std::nan("");
        b.bound_text = "[" + (c.lower_bound ? format_number(*c.lower_bound) : std::string("-inf")) + ", " +
                       (c.upper_bound ? format_number(*c.upper_bound) : std::string("inf")) + "]";
        if (n == 0 || !std::isfinite(b.mean_estimate)) {
            b.within = !(c.lower_bound || c.upper_bound) && n > 0;
        } else {
            b.within = (!c.lower_bound || b.mean_estimate >= *c.lower_bound) &&
                       (!c.upper_bound || b.mean_estimate <= *c.upper_bound);
        }
        out.push_back(b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Distribution-shift diagnostic
// ---------------------------------------------------------------------------

struct ShiftPoint {
    std::string estimator;     // tre, mdre_aux, mdre_waymarks
    std::string readout;       // link_k, chain, p/q
    std::string sampled_from;  // p, m1.., q
    double x = 0.0;            // first coordinate
    double estimated = 0.0;
    double truth = 0.0;
};

struct ShiftSummary {
    std::string estimator;
    std::string readout;
    std::string sampled_from;
    double mean_abs_error = 0.0;
    Index n = 0;
};

struct ShiftReport {
    std::vector<ShiftPoint> points;
    std::vector<ShiftSummary> summary;

    const ShiftSummary& find(const std::string& est, const std::string& readout, const std::string& from) const {
        for (const auto& s : summary)
            if (s.estimator == est && s.readout == readout && s.sampled_from == from) return s;
        throw InvalidArgument("no shift summary for " + est + "/" + readout + "/" + from);
    }
};

/// Fits TRE (linear-mix waymarks), MDRE with the configured auxiliary, and MDRE with
/// TRE's waymarks as auxiliaries, then evaluates every readout on fresh samples from
/// p, each waymark, and q. Needs Gaussian p and q so every true log-ratio is exact.
inline ShiftReport shift_diagnostic(const ExperimentConfig& c) {
    c.validate();
    const auto* pg = std::get_if<Gaussian>(&c.p.value);
    const auto* qg = std::get_if<Gaussian>(&c.q.value);
    require(pg && qg && c.q_source == QSource::spec, "the shift diagnostic needs Gaussian p and q");
    const std::vector<double> alphas = c.tre_alphas.empty() ? uniform_waymarks(3) : c.tre_alphas;
    const Index n = c.samples_per_class;
    const Index n_eval = c.eval_samples > 0 ? c.eval_samples : std::min<Index>(n, 2000);
    const std::uint64_t seed = c.seed;

    // Exact densities of p, the waymarks, and q.
    std::vector<DistributionSpec> chain{*pg};
    std::vector<std::string> names{"p"};
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        chain.push_back(linear_mix_gaussian(*pg, *qg, alphas[k], c.tre_variant));
        names.push_back("m" + std::to_string(k + 1));
    }
    chain.push_back(*qg);
    names.push_back("q");
    std::vector<LogDensity> dens;
    for (const auto& s : chain) dens.emplace_back(s);

    OptimizerConfig opt = c.optimizer;
    opt.seed = seed;
    const Matrix xp = sample(c.p, n, mix_seed(seed, 1));
    const Matrix xq = sample(c.q, n, mix_seed(seed, 2));
    const QuadraticScore proto(xp.cols());
    const auto tre = fit_tre(xp, xq, alphas, c.tre_variant, proto, opt, mix_seed(seed, 4));

    ClassedSamples aux_data{{xp, xq}};
    for (auto& m : build_auxiliary_samples(c.auxiliary, xp, xq, mix_seed(seed, 5))) aux_data.classes.push_back(m);
    const auto mdre_aux = fit_multiclass(aux_data, proto, opt, {}, mdre_labels(aux_data.num_classes() - 2));

    ClassedSamples way_data{{xp, xq}};
    for (auto& m : build_auxiliary_samples(LinearMix{alphas, c.tre_variant}, xp, xq, mix_seed(seed, 6)))
        way_data.classes.push_back(m);
    const auto mdre_way = fit_multiclass(way_data, proto, opt, {}, mdre_labels(way_data.num_classes() - 2));

    // Evaluation sets: fresh p, q and waymark samples; plus samples of MDRE's own auxiliary.
    const Matrix ep = sample(c.p, n_eval, mix_seed(seed, 21));
    const Matrix eq = sample(c.q, n_eval, mix_seed(seed, 22));
    std::vector<Matrix> eval_sets{ep};
    for (auto& m : build_auxiliary_samples(LinearMix{alphas, c.tre_variant}, ep, eq, mix_seed(seed, 23)))
        eval_sets.push_back(m);
    eval_sets.push_back(eq);

    ShiftReport report;
    auto add = [&](const std::string& est, const std::string& readout, const std::string& from, const Matrix& x,
                   const Vector& estimated, const Vector& truth) {
        ShiftSummary s{est, readout, from, (estimated - truth).cwiseAbs().mean(), x.rows()};
        report.summary.push_back(s);
        for (Index i = 0; i < x.rows(); ++i) report.points.push_back({est, readout, from, x(i, 0), estimated[i], truth[i]});
    };

    const auto pq_truth = [&](const Matrix& x) -> Vector { return dens.front().rows(x) - dens.back().rows(x); };
    for (std::size_t s = 0; s < eval_sets.size(); ++s) {
        const Matrix& x = eval_sets[s];
        Vector chain_est = Vector::Zero(x.rows());
        for (std::size_t k = 0; k < tre.models.size(); ++k) {
            const Vector est = tre.models[k].log_ratio_rows(0, 1, x);
            chain_est += est;
            add("tre", "link_" + std::to_string(k + 1), names[s], x, est, dens[k].rows(x) - dens[k + 1].rows(x));
        }
        add("tre", "chain", names[s], x, chain_est, pq_truth(x));
        add("mdre_waymarks", "p/q", names[s], x, mdre_way.models.front().log_ratio_rows(0, 1, x), pq_truth(x));
    }

    // MDRE with its own auxiliary on p, m, q.
    std::vector<std::pair<std::string, Matrix>> aux_sets{{"p", ep}};
    const auto aux_eval = build_auxiliary_samples(c.auxiliary, ep, eq, mix_seed(seed, 24));
    for (std::size_t k = 0; k < aux_eval.size(); ++k)
        aux_sets.emplace_back(aux_eval.size() == 1 ? "m" : "m" + std::to_string(k + 1), aux_eval[k]);
    aux_sets.emplace_back("q", eq);
    for (const auto& [from, x] : aux_sets) add("mdre_aux", "p/q", from, x, mdre_aux.models.front().log_ratio_rows(0, 1, x), pq_truth(x));
    return report;
}

// ---------------------------------------------------------------------------
// Support (Radon-Nikodym) diagnostic
// ---------------------------------------------------------------------------

struct RndReport {
    Index m_samples = 0;
    Index violations = 0;      // m-samples where ln q = -inf, so ln(m/q) is undefined
    Index over_threshold = 0;  // finite ln(m/q) above the threshold
    double max_finite = kNegInf;
    double threshold = 0.0;
    Index p_outside_m = 0;     // p-samples where ln m = -inf
    Index p_samples = 0;
};

inline RndReport rnd_diagnostic(const DistributionSpec& p, const DistributionSpec& q, const DistributionSpec& m, Index n,
                                std::uint64_t seed, double threshold = 20.0) {
    require(dimension(p) == 1 && dimension(q) == 1 && dimension(m) == 1, "the support diagnostic is one-dimensional");
    require(n >= 1, "the support diagnostic needs samples");
    RndReport r;
    r.threshold = threshold;
    const Matrix xm = sample(m, n, mix_seed(seed, 41));
    const Vector lm = LogDensity(m).rows(xm);
    const Vector lq = LogDensity(q).rows(xm);
    r.m_samples = n;
    for (Index i = 0; i < n; ++i) {
        if (lq[i] == kNegInf) {
            ++r.violations;
            continue;
        }
        const double v = lm[i] - lq[i];
        r.max_finite = std::max(r.max_finite, v);
        if (v > threshold) ++r.over_threshold;
    }
    const Matrix xp = sample(p, n, mix_seed(seed, 42));
    r.p_outside_m = (LogDensity(m).rows(xp).array() == kNegInf).count();
    r.p_samples = n;
    return r;
}

inline RndReport rnd_diagnostic(const ExperimentConfig& c) {
    const auto* o = std::get_if<Overlapping>(&c.auxiliary.value);
    require(o != nullptr, "the support diagnostic needs an overlapping auxiliary spec");
    return rnd_diagnostic(c.p, c.q, o->spec, c.samples_per_class, c.seed);
}

// ---------------------------------------------------------------------------
// Posterior uncertainty
// ---------------------------------------------------------------------------

struct HmcReport {
    Vector grid;
    Vector point_estimate;
    PosteriorRatioStats stats;
    double acceptance_rate = 0.0;
    double median_abs_energy_error = 0.0;
    // Outside [0.2, 0.99] the step size is badly matched to the posterior scale.
    bool acceptance_flagged = false;
};

inline HmcReport hmc_uncertainty(const ExperimentConfig& c) {
    c.validate();
    const auto data = prepare_data(c, c.seed);
    require(c.method == Method::mdre, "posterior uncertainty is computed for MDRE fits");
    const auto fit = fit_experiment(c, data, c.seed);
    ClassedSamples classed{{data.p, data.q}};
    for (const auto& m : data.auxiliary) classed.classes.push_back(m);
    HmcConfig h = c.hmc;
    h.seed = c.seed;
    const auto& model = fit.models.front();

    HmcReport r;
    r.grid = Vector::LinSpaced(c.grid_points, c.grid_lo, c.grid_hi);
    const Matrix pts = r.grid;
    r.point_estimate = model.log_ratio_rows(0, 1, pts);
    // The prior sits on the parameters the classifier was trained in.
    HmcResult res;
    if (c.optimizer.standardize) {
        const auto view = standardized_view(model, classed);
        res = hmc_sample(classed, view, h);
        r.stats = ratio_uncertainty(view, res.draws, pts);
    } else {
        res = hmc_sample(classed, model, h);
        r.stats = ratio_uncertainty(model, res.draws, pts);
    }
    r.acceptance_rate = res.acceptance_rate;
    r.acceptance_flagged = res.acceptance_rate < 0.2 || res.acceptance_rate > 0.99;
    if (!res.energy_errors.empty()) {
        std::vector<double> e;
        for (double v : res.energy_errors) e.push_back(std::abs(v));
        std::nth_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(e.size() / 2), e.end());
        r.median_abs_energy_error = e[e.size() / 2];
    }
    return r;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace presets {

inline const std::vector<double> kTreGridGap3{0.053, 0.11, 0.16, 0.21, 0.26, 0.31, 0.37, 0.42, 0.47,
                                              0.53,  0.58, 0.63, 0.68, 0.74, 0.79, 0.84, 0.89, 0.95};
inline const std::vector<double> kTreGridGap4{0.03, 0.07, 0.1,  0.14, 0.17, 0.21, 0.24, 0.28, 0.31, 0.34,
                                              0.38, 0.41, 0.45, 0.48, 0.52, 0.55, 0.59, 0.62, 0.66, 0.69,
                                              0.72, 0.76, 0.79, 0.83, 0.86, 0.9,  0.93, 0.97};
inline const std::vector<double> kTreGridWide{0.11, 0.22, 0.33, 0.44, 0.55, 0.66, 0.77, 0.88};

inline OptimizerConfig one_dim_optimizer() {
    OptimizerConfig o;
    o.batch = 4096;
    o.epochs = 300;
    return o;
}

inline OptimizerConfig high_dim_optimizer() {
    OptimizerConfig o;
    o.learning_rate = 1e-3;
    o.batch = 2048;
    o.epochs = 150;
    return o;
}

inline Vector randomized_mean(Index dim, double lo, double hi, std::uint64_t seed) {
    Rng rng = make_rng(seed, 51);
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v[i] = lo + (hi - lo) * uniform_open(rng);
    return v;
}

inline ExperimentConfig kl_1d(std::string name, double p_mean, double p_sd, double q_mean, double q_sd, Method method) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.task = TaskKind::kl_1d;
    c.p = normal_1d(p_mean, p_sd);
    c.q = normal_1d(q_mean, q_sd);
    c.method = method;
    c.samples_per_class = 100000;
    c.optimizer = one_dim_optimizer();
    c.runs = 3;
    return c;
}

/// Block-correlated Gaussian p against the product of its marginals (true MI
/// `target_mi`), with linear-mix auxiliaries for MDRE.
inline ExperimentConfig mi_symmetric(std::string name, Index dim, double target_mi, std::vector<double> alphas,
                                     Method method) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.task = TaskKind::mi_highdim;
    c.p = block_gaussian(dim, 0.0, rho_for_target_mi(dim / 2, target_mi));
    c.q_source = QSource::product_of_marginals;
    const auto classes = static_cast<Index>(method == Method::mdre ? 2 + alphas.size() : 2);
    if (!alphas.empty()) c.auxiliary = LinearMix{std::move(alphas), MixVariant::plain};
    c.method = method;
    c.samples_per_class = 100000 / classes;  // 10^5 samples in total
    c.eval_samples = 20000;
    c.optimizer = high_dim_optimizer();
    c.runs = 3;
    return c;
}

/// Block-correlated N(mu_p 1, S) against N(mu_q 1, I).
inline ExperimentConfig mi_shifted(std::string name, Index dim, double block_mi, double mu_p, double mu_q,
                                   std::vector<double> alphas, Method method) {
    ExperimentConfig c = mi_symmetric(std::move(name), dim, block_mi, std::move(alphas), method);
    c.p = block_gaussian(dim, mu_p, rho_for_target_mi(dim / 2, block_mi));
    c.q = standard_gaussian(dim, mu_q);
    c.q_source = QSource::spec;
    return c;
}

inline ExperimentConfig robustness(std::string name, DistributionSpec p, DistributionSpec q) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.task = TaskKind::robustness;
    c.p = std::move(p);
    c.q = std::move(q);
    c.auxiliary = LinearMix{{0.25, 0.5, 0.75}, MixVariant::plain};
    c.samples_per_class = 50000;
    c.eval_samples = 20000;
    c.optimizer = high_dim_optimizer();
    c.truth_samples = 200000;
    c.extended = true;
    return c;
}

inline std::vector<ExperimentConfig> build_all() {
    std::vector<ExperimentConfig> out;
    auto bounded = [](ExperimentConfig c, std::optional<double> lo, std::optional<double> hi) {
        c.lower_bound = lo;
        c.upper_bound = hi;
        return c;
    };

    // Separated 1D Gaussians, one Cauchy auxiliary for MDRE; TRE uses its skewed waymark grid.
    {
        auto c = kl_1d("kl1d_gap3", -1.0, 0.08, 2.0, 0.15, Method::mdre);
        c.description = "N(-1,0.08) vs N(2,0.15), MDRE with m = Cauchy(0,1)";
        out.push_back(bounded(c, 190.27, 210.27));
        auto b = kl_1d("kl1d_gap3_bdre", -1.0, 0.08, 2.0, 0.15, Method::bdre);
        b.description = "N(-1,0.08) vs N(2,0.15), single binary classifier";
        out.push_back(bounded(b, std::nullopt, 60.0));
        auto t = kl_1d("kl1d_gap3_tre", -1.0, 0.08, 2.0, 0.15, Method::tre);
        t.description = "N(-1,0.08) vs N(2,0.15), telescoping chain over 18 waymarks";
        t.tre_alphas = kTreGridGap3;
        out.push_back(bounded(t, 100.0, 170.0));
    }
    {
        auto c = kl_1d("kl1d_gap4", -2.0, 0.08, 2.0, 0.15, Method::mdre);
        c.description = "N(-2,0.08) vs N(2,0.15), MDRE with m = Cauchy(0,1)";
        out.push_back(bounded(c, 340.82, 370.82));
        auto b = kl_1d("kl1d_gap4_bdre", -2.0, 0.08, 2.0, 0.15, Method::bdre);
        b.description = "N(-2,0.08) vs N(2,0.15), single binary classifier";
        out.push_back(b);
        auto t = kl_1d("kl1d_gap4_tre", -2.0, 0.08, 2.0, 0.15, Method::tre);
        t.description = "N(-2,0.08) vs N(2,0.15), telescoping chain over 28 waymarks";
        t.tre_alphas = kTreGridGap4;
        out.push_back(t);
    }
    {
        auto c = kl_1d("wide_1d", -10.0, 1.0, 10.0, 1.0, Method::mdre);
        c.description = "N(-10,1) vs N(10,1), MDRE with m = Cauchy(0,2)";
        c.auxiliary = Overlapping{cauchy_1d(0.0, 2.0)};
        c.extended = true;
        out.push_back(c);
        auto t = kl_1d("wide_1d_tre", -10.0, 1.0, 10.0, 1.0, Method::tre);
        t.description = "N(-10,1) vs N(10,1), telescoping chain over 8 waymarks";
        t.tre_alphas = kTreGridWide;
        t.extended = true;
        out.push_back(t);
    }

    // High-dimensional MI / KL benchmark.
    {
        auto c = mi_symmetric("mi_dim40_sym", 40, 20.0, {0.25, 0.5, 0.75}, Method::mdre);
        c.description = "dim 40 block Gaussian vs product of marginals, MI 20";
        out.push_back(bounded(c, 17.5, 21.0));
        auto b = mi_symmetric("mi_dim40_sym_bdre", 40, 20.0, {}, Method::bdre);
        b.description = "dim 40 MI 20, single binary classifier";
        out.push_back(b);
        auto s = mi_shifted("mi_dim40_shift", 40, 20.0, -1.0, 1.0, {0.35, 0.5, 0.85}, Method::mdre);
        s.description = "dim 40 N(-1, block) vs N(1, I), KL 100";
        out.push_back(bounded(s, 90.0, 135.0));
        auto sb = mi_shifted("mi_dim40_shift_bdre", 40, 20.0, -1.0, 1.0, {}, Method::bdre);
        sb.description = "dim 40 N(-1, block) vs N(1, I), single binary classifier";
        out.push_back(bounded(sb, std::nullopt, 50.0));
    }
    {
        auto add_ext = [&](ExperimentConfig c, std::string d) {
            c.extended = true;
            c.runs = 1;
            c.description = std::move(d);
            out.push_back(std::move(c));
        };
        const std::vector<double> five{0.15, 0.35, 0.5, 0.75, 0.95};
        add_ext(mi_symmetric("mi_dim160_sym", 160, 40.0, {0.25, 0.5, 0.75}, Method::mdre), "dim 160 MI 40");
        add_ext(mi_shifted("mi_dim160_shift", 160, 40.0, -0.5, 0.6, five, Method::mdre), "dim 160 N(-0.5, block) vs N(0.6, I)");
        add_ext(mi_symmetric("mi_dim320_sym", 320, 80.0, {0.25, 0.5, 0.75}, Method::mdre), "dim 320 MI 80");
        add_ext(mi_shifted("mi_dim320_shift", 320, 80.0, -0.5, 0.5, five, Method::mdre), "dim 320 N(-0.5, block) vs N(0.5, I)");
    }

    // Robustness rows.
    {
        ExperimentConfig c;
        c.name = "trunc_normal";
        c.description = "truncated normals, m = TN(-1, 2, (-1.1, 1.2))";
        c.task = TaskKind::robustness;
        c.p = TruncatedNormal{-1.0, 0.1, -1.1, -0.9};
        c.q = TruncatedNormal{1.0, 0.2, -1.1, 1.2};
        c.auxiliary = Overlapping{TruncatedNormal{-1.0, 2.0, -1.1, 1.2}};
        c.samples_per_class = 100000;
        c.optimizer = one_dim_optimizer();
        c.runs = 3;
        // Quadrature truth 50.7929, +- 5.
        out.push_back(bounded(c, 45.79, 55.79));
    }
    {
        const std::uint64_t ms = 2024;
        auto block = [](Index dim, const Vector& mean) {
            return Gaussian{mean, Block2x2{rho_for_target_mi(dim / 2, static_cast<double>(dim) / 4.0)}};
        };
        auto block_t = [](Index dim, const Vector& loc, double df) {
            return StudentT{loc, Block2x2{rho_for_target_mi(dim / 2, static_cast<double>(dim) / 4.0)}, df};
        };
        out.push_back(robustness("rand_mean160", block(160, randomized_mean(160, -0.5, 0.5, ms)),
                                 Gaussian{randomized_mean(160, -0.5, 0.5, ms + 1), Isotropic{1.0}}));
        out.back().description = "dim 160 randomized means, block vs identity covariance";
        Mixture mog{{0.5, 0.5}, {standard_gaussian(160, 0.9), standard_gaussian(160, 1.1)}};
        out.push_back(robustness("mixture160", block(160, Vector::Constant(160, -1.0)), mog));
        out.back().description = "dim 160 block Gaussian vs two-component Gaussian mixture";
        out.push_back(robustness("student160_df5", block_t(160, randomized_mean(160, -0.5, 0.5, ms + 2), 5.0),
                                 StudentT{randomized_mean(160, -0.5, 0.5, ms + 3), Isotropic{1.0}, 5.0}));
        out.back().description = "dim 160 Student-t (df 5), randomized locations";
        out.push_back(robustness("student320_df10", block_t(320, randomized_mean(320, -0.5, 0.5, ms + 4), 10.0),
                                 StudentT{randomized_mean(320, -0.5, 0.5, ms + 5), Isotropic{1.0}, 10.0}));
        out.back().description = "dim 320 Student-t (df 10), randomized locations";
        out.push_back(robustness("rand_mean320", block(320, randomized_mean(320, -1.0, 1.0, ms + 6)),
                                 Gaussian{randomized_mean(320, -1.0, 1.0, ms + 7), Isotropic{1.0}}));
        out.back().description = "dim 320 randomized means in (-1, 1)";
        out.push_back(robustness("student320_wide_df10", block_t(320, randomized_mean(320, -1.0, 1.0, ms + 8), 10.0),
                                 StudentT{randomized_mean(320, -1.0, 1.0, ms + 9), Isotropic{1.0}, 10.0}));
        out.back().description = "dim 320 Student-t (df 10), locations in (-1, 1)";
        out.push_back(robustness("gauss_vs_student320_df20", block(320, Vector::Zero(320)),
                                 StudentT{Vector::Zero(320), Isotropic{1.0}, 20.0}));
        out.back().description = "dim 320 block Gaussian vs Student-t (df 20)";
    }

    // Diagnostics.
    {
        ExperimentConfig c;
        c.name = "shift_tre_vs_mdre";
        c.description = "N(-1,0.1) vs N(1,0.2): TRE links and chain vs MDRE on p, waymark and q samples";
        c.task = TaskKind::shift_diagnostic;
        c.p = normal_1d(-1.0, 0.1);
        c.q = normal_1d(1.0, 0.2);
        c.auxiliary = Overlapping{cauchy_1d(0.0, 1.0)};
        c.method = Method::tre;
        c.tre_alphas = uniform_waymarks(3);
        c.tre_variant = MixVariant::plain;
        c.samples_per_class = 10000;
        c.eval_samples = 2000;
        c.optimizer = one_dim_optimizer();
        c.optimizer.batch = 1024;
        // The links are nearly separable; at 300 epochs they are far from converged.
        c.optimizer.epochs = 3000;
        out.push_back(c);
    }
    {
        ExperimentConfig c;
        c.name = "hmc_uncertainty";
        c.description = "posterior spread of the MDRE log-ratio, N(-1,0.1) vs N(1,0.2), m = Cauchy(0,1)";
        c.task = TaskKind::hmc_uncertainty;
        c.p = normal_1d(-1.0, 0.1);
        c.q = normal_1d(1.0, 0.2);
        c.samples_per_class = 1000;
        c.optimizer = one_dim_optimizer();
        c.optimizer.batch = 0;
        // HMC starts at the fit, so it has to be converged; 2000 epochs leaves the loss at 0.35 vs 0.245.
        c.optimizer.epochs = 20000;
        // At the default 1e-3 nearly every trajectory is accepted and the chain barely moves.
        c.hmc.step_size = 0.03;
        out.push_back(c);
        auto s = c;
        s.name = "hmc_uncertainty_swapped";
        s.description = "as hmc_uncertainty with the scales swapped: N(-1,0.2) vs N(1,0.1)";
        s.p = normal_1d(-1.0, 0.2);
        s.q = normal_1d(1.0, 0.1);
        out.push_back(s);
    }
    {
        ExperimentConfig c;
        c.name = "rnd_truncated_mixture";
        c.description = "finite-support mixtures where m = TN(0,1,(-1.2,1.2)) leaves q's support";
        c.task = TaskKind::rnd_diagnostic;
        c.p = Mixture{{0.5, 0.5}, {TruncatedNormal{-1.0, 0.1, -1.1, -0.9}, TruncatedNormal{1.0, 0.1, 0.9, 1.1}}};
        c.q = Mixture{{0.5, 0.5}, {TruncatedNormal{-1.0, 0.2, -1.2, 0.8}, TruncatedNormal{1.0, 0.2, 0.8, 1.0}}};
        c.auxiliary = Overlapping{TruncatedNormal{0.0, 1.0, -1.2, 1.2}};
        c.samples_per_class = 10000;
        out.push_back(c);
        auto n = c;
        n.name = "rnd_nested_control";
        n.description = "control: m = TN(0,1,(-1.2,1.0)) has exactly q's support";
        n.auxiliary = Overlapping{TruncatedNormal{0.0, 1.0, -1.2, 1.0}};
        out.push_back(n);
    }
    return out;
}

}  // namespace presets

inline const std::vector<ExperimentConfig>& all_presets() {
    static const std::vector<ExperimentConfig> list = presets::build_all();
    return list;
}

inline std::optional<ExperimentConfig> find_preset(const std::string& name) {
    for (const auto& c : all_presets())
        if (c.name == name) return c;
    return std::nullopt;
}

/// Estimation presets run by `bench all`: everything that is neither a diagnostic nor extended.
inline std::vector<ExperimentConfig> bench_presets(bool include_extended = false) {
    std::vector<ExperimentConfig> out;
    for (const auto& c : all_presets()) {
        const bool estimation =
            c.task == TaskKind::kl_1d || c.task == TaskKind::mi_highdim || c.task == TaskKind::robustness;
        if (estimation && (include_extended || !c.extended)) out.push_back(c);
    }
    return out;
}

}  // namespace mdre
