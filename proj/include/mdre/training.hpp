#pragma once

// Fitting MDRE (one multiclass classifier), BDRE (one binary classifier) and TRE
// (a chain of binary classifiers along linear-mixing waymarks) with Adam.

#include "mdre/auxiliary.hpp"
#include "mdre/score.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mdre {

enum class InitKind { zeros, gaussian };

struct OptimizerConfig {
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    Index epochs = 500;
    Index batch = 0;  // 0 = full batch, else rows per step across all classes
    std::uint64_t seed = 0;
    InitKind init = InitKind::zeros;
    double init_std = 0.1;
    double validation_fraction = 0.0;  // held out per class, e.g. 0.1
    // Quadratic scores only: optimise each class's score in coordinates centred and
    // scaled by that class's samples (median / MAD). The fitted model is returned in
    // raw coordinates.
    bool standardize = true;

    void validate() const {
        require(learning_rate > 0.0, "learning rate must be positive");
        require(epochs >= 1, "epochs must be at least 1");
        require(batch >= 0, "batch size must be non-negative");
        require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0, 1)");
        require(epsilon > 0.0, "Adam epsilon must be positive");
        require(validation_fraction >= 0.0 && validation_fraction < 1.0, "validation fraction must lie in [0, 1)");
    }
};

struct TrainingInfo {
    double initial_loss = 0.0;
    double final_loss = 0.0;  // best recorded training loss
    Index best_epoch = 0;
    Index epochs_run = 0;
    Vector train_accuracy;
    Vector validation_accuracy;  // empty unless a validation split was configured
    std::uint64_t seed = 0;
};

/// Raised when the training loss stops being finite. Carries the last finite state.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(Index epoch, Vector last_finite)
        : Error("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss)"),
          epoch(epoch),
          last_finite_parameters(std::move(last_finite)) {}
    Index epoch;
    Vector last_finite_parameters;
};

enum class Method { mdre, bdre, tre };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::mdre: return "mdre";
        case Method::bdre: return "bdre";
        case Method::tre: return "tre";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "mdre") return Method::mdre;
    if (s == "bdre") return Method::bdre;
    if (s == "tre") return Method::tre;
    throw InvalidArgument("unknown method '" + s + "'");
}

/// A trained estimator. MDRE and BDRE hold one model whose classes 0 and 1 are p and
/// q; TRE holds K+1 binary links (m_{k-1} vs m_k, with m_0 = p and m_{K+1} = q).
template <ScoreFamily Score>
struct FittedEstimator {
    Method method = Method::mdre;
    std::vector<ScoreSet<Score>> models;
    std::vector<TrainingInfo> info;
    std::vector<double> waymark_alphas;  // TRE only

    Index dim() const { return models.front().dim(); }
};

namespace detail {

struct Split {
    ClassedSamples train;
    ClassedSamples validation;
};

inline Split split_validation(const ClassedSamples& data, double fraction) {
    Split s;
    for (const auto& c : data.classes) {
        const auto n_val = static_cast<Index>(std::floor(fraction * static_cast<double>(c.rows())));
        s.train.classes.push_back(c.topRows(c.rows() - n_val));
        s.validation.classes.push_back(c.bottomRows(n_val));
    }
    return s;
}

class Adam {
public:
    Adam(const OptimizerConfig& cfg, Index n) : cfg_(cfg), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

    void step(Vector& theta, const Vector& grad) {
        ++t_;
        m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
        v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        theta.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
    }

private:
    const OptimizerConfig& cfg_;
    Vector m_;
    Vector v_;
    long t_ = 0;
};

/// One epoch's minibatches: per class, rows split in proportion to class size.
inline std::vector<ClassedSamples> make_batches(const ClassedSamples& data, Index batch, Rng& rng) {
    const Index total = data.total();
    const Index steps = std::max<Index>(1, (total + batch - 1) / batch);
    std::vector<ClassedSamples> out(static_cast<std::size_t>(steps));
    for (const auto& c : data.classes) {
        const auto perm = random_permutation(c.rows(), rng);
        for (Index s = 0; s < steps; ++s) {
            const Index lo = c.rows() * s / steps;
            const Index hi = c.rows() * (s + 1) / steps;
            Matrix rows(std::max<Index>(hi - lo, 1), c.cols());
            if (hi == lo) {
                rows.row(0) = c.row(perm[static_cast<std::size_t>(lo % c.rows())]);
            } else {
                for (Index i = lo; i < hi; ++i) rows.row(i - lo) = c.row(perm[static_cast<std::size_t>(i)]);
            }
            out[static_cast<std::size_t>(s)].classes.push_back(std::move(rows));
        }
    }
    return out;
}

}  // namespace detail

/// A quadratic score evaluated at x' = (x - center) / scale. Spans the same
/// functions as QuadraticScore; the optimiser uses it as a per-class preconditioner.
class StandardizedQuadratic {
public:
    StandardizedQuadratic(Vector center, Vector scale)
        : inner_(center.size()), center_(std::move(center)), scale_(std::move(scale)) {}

    /// The standardized form of a raw-coordinate score: with x = c + S z,
    /// W1' = S W1 S, w2' = S (w2 + 2 W1 c), b' = c^T W1 c + w2 . c + b.
    static StandardizedQuadratic from_raw(const QuadraticScore& raw, Vector center, Vector scale) {
        if (raw.dim() != center.size()) throw DimensionMismatch("standardized score", raw.dim(), center.size());
        StandardizedQuadratic s(std::move(center), std::move(scale));
        const auto& c = s.center_;
        const Matrix w1 = s.scale_.asDiagonal() * raw.w1() * s.scale_.asDiagonal();
        const Vector w2 = s.scale_.cwiseProduct(raw.w2() + 2.0 * raw.w1() * c);
        s.inner_ = QuadraticScore(w1, w2, c.dot(raw.w1() * c) + raw.w2().dot(c) + raw.b());
        return s;
    }

    Index dim() const { return inner_.dim(); }
    Index num_params() const { return inner_.num_params(); }
    Vector evaluate_rows(const RowsRef& x) const { return inner_.evaluate_rows(transform(x)); }
    Vector weighted_gradient(const RowsRef& x, const Eigen::Ref<const Vector>& w) const {
        return inner_.weighted_gradient(transform(x), w);
    }
    Vector flatten() const { return inner_.flatten(); }
    void assign(const Vector& theta) { inner_.assign(theta); }

    /// The same function written as x^T W1 x + w2 . x + b in raw coordinates.
    QuadraticScore to_raw() const {
        const Vector inv = scale_.cwiseInverse();
        const Matrix w1 = inv.asDiagonal() * inner_.w1() * inv.asDiagonal();
        const Vector lin = inv.cwiseProduct(inner_.w2());
        const Vector w2 = lin - 2.0 * w1 * center_;
        const double b = center_.dot(w1 * center_) - lin.dot(center_) + inner_.b();
        return QuadraticScore(w1, w2, b);
    }

private:
    Matrix transform(const RowsRef& x) const {
        return ((x.rowwise() - center_.transpose()).array().rowwise() / scale_.transpose().array()).matrix();
    }

    QuadraticScore inner_;
    Vector center_;
    Vector scale_;
};

namespace detail {

/// Per-column median and MAD-based scale (1.4826 * MAD), falling back to the standard
/// deviation and then to 1 for degenerate columns.
inline std::pair<Vector, Vector> robust_location_scale(const Matrix& x) {
    const Index d = x.cols();
    Vector center(d), scale(d);
    std::vector<double> buf(static_cast<std::size_t>(x.rows()));
    auto median = [&buf] {
        const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
        std::nth_element(buf.begin(), mid, buf.end());
        return *mid;
    };
    for (Index j = 0; j < d; ++j) {
        for (Index i = 0; i < x.rows(); ++i) buf[static_cast<std::size_t>(i)] = x(i, j);
        center[j] = median();
        for (Index i = 0; i < x.rows(); ++i) buf[static_cast<std::size_t>(i)] = std::abs(x(i, j) - center[j]);
        double s = 1.4826 * median();
        if (!(s > 0.0) || !std::isfinite(s)) {
            const double mean = x.col(j).mean();
            s = std::sqrt((x.col(j).array() - mean).square().mean());
        }
        scale[j] = (s > 0.0 && std::isfinite(s)) ? s : 1.0;
    }
    return {center, scale};
}

template <ScoreFamily Score>
TrainingInfo optimize(ScoreSet<Score>& model, const ClassedSamples& train, const ClassedSamples& validation,
                      const OptimizerConfig& opt) {
    const Vector weights = loss_weights(model, train);

    Vector theta = model.parameters();
    if (opt.init == InitKind::zeros) {
        theta.setZero();
    } else {
        Rng rng = make_rng(opt.seed, 101);
        NormalSource normal(rng);
        for (Index i = 0; i < theta.size(); ++i) theta[i] = opt.init_std * normal();
    }
    model.set_parameters(theta);

    TrainingInfo info;
    info.seed = opt.seed;
    Adam adam(opt, theta.size());
    Rng batch_rng = make_rng(opt.seed, 102);
    Vector grad;
    Vector best = theta;
    double best_loss = kPosInf;

    auto record = [&](double l, Index epoch) {
        if (!std::isfinite(l)) throw TrainingDiverged(epoch, best);
        if (l < best_loss) {
            best_loss = l;
            best = theta;
            info.best_epoch = epoch;
        }
    };

    for (Index epoch = 0; epoch < opt.epochs; ++epoch) {
        if (opt.batch == 0) {
            const double l = weighted_nll(model, train, weights, &grad);
            if (epoch == 0) info.initial_loss = l;
            record(l, epoch);
            adam.step(theta, grad);
            model.set_parameters(theta);
        } else {
            const double l = weighted_nll(model, train, weights);
            if (epoch == 0) info.initial_loss = l;
            record(l, epoch);
            for (const auto& mb : make_batches(train, opt.batch, batch_rng)) {
                weighted_nll(model, mb, loss_weights(model, mb), &grad);
                adam.step(theta, grad);
                model.set_parameters(theta);
            }
        }
        info.epochs_run = epoch + 1;
    }
    record(weighted_nll(model, train, weights), opt.epochs);

    model.set_parameters(best);
    info.final_loss = best_loss;
    info.train_accuracy = class_accuracy(model, train);
    if (!validation.classes.empty() && validation.classes.front().rows() > 0)
        info.validation_accuracy = class_accuracy(model, validation);
    return info;
}

}  // namespace detail

/// `model` rewritten per class in the standardized coordinates training uses for
/// `data` (same functions, different parameters).
inline ScoreSet<StandardizedQuadratic> standardized_view(const ScoreSet<QuadraticScore>& model,
                                                         const ClassedSamples& data) {
    require(data.num_classes() == model.num_classes(), "data and model disagree on the number of classes");
    std::vector<StandardizedQuadratic> scores;
    for (Index k = 0; k < model.num_classes(); ++k) {
        auto [center, scale] = detail::robust_location_scale(data.classes[static_cast<std::size_t>(k)]);
        scores.push_back(StandardizedQuadratic::from_raw(model.score(k), std::move(center), std::move(scale)));
    }
    return ScoreSet<StandardizedQuadratic>(std::move(scores), model.priors(), model.labels());
}

/// Minimises the multinomial cross-entropy over `model`'s parameters in place and
/// returns training metadata. The returned state is the one with the lowest
/// recorded full-data training loss.
template <ScoreFamily Score>
TrainingInfo train_in_place(ScoreSet<Score>& model, const ClassedSamples& data, const OptimizerConfig& opt) {
    opt.validate();
    require(data.num_classes() == model.num_classes(), "data and model disagree on the number of classes");
    for (const auto& c : data.classes) {
        require(c.rows() >= 2, "every class needs at least two samples");
        if (c.cols() != model.dim()) throw DimensionMismatch("training samples", model.dim(), c.cols());
    }

    const detail::Split split = opt.validation_fraction > 0.0 ? detail::split_validation(data, opt.validation_fraction)
                                                              : detail::Split{data, {}};

    if constexpr (std::is_same_v<Score, QuadraticScore>) {
        if (opt.standardize) {
            std::vector<StandardizedQuadratic> scores;
            for (const auto& c : split.train.classes) {
                auto [center, scale] = detail::robust_location_scale(c);
                scores.emplace_back(std::move(center), std::move(scale));
            }
            ScoreSet<StandardizedQuadratic> work(std::move(scores), model.priors(), model.labels());
            TrainingInfo info = detail::optimize(work, split.train, split.validation, opt);
            std::vector<QuadraticScore> raw;
            for (const auto& s : work.scores()) raw.push_back(s.to_raw());
            model = ScoreSet<QuadraticScore>(std::move(raw), model.priors(), model.labels());
            return info;
        }
    }
    return detail::optimize(model, split.train, split.validation, opt);
}

/// MDRE: one C-class classifier; class 0 must hold p-samples and class 1 q-samples.
template <ScoreFamily Score>
FittedEstimator<Score> fit_multiclass(const ClassedSamples& data, const Score& prototype, const OptimizerConfig& opt,
                                      const Vector& priors = {}, std::vector<std::string> labels = {}) {
    require(data.num_classes() >= 2, "multiclass fitting needs at least two classes");
    ScoreSet<Score> model(std::vector<Score>(static_cast<std::size_t>(data.num_classes()), prototype), priors,
                          std::move(labels));
    FittedEstimator<Score> fit;
    fit.method = Method::mdre;
    fit.info.push_back(train_in_place(model, data, opt));
    fit.models.push_back(std::move(model));
    return fit;
}

/// BDRE: the two-class special case; the log-ratio readout is h_p - h_q.
template <ScoreFamily Score>
FittedEstimator<Score> fit_bdre(const Matrix& samples_p, const Matrix& samples_q, const Score& prototype,
                                const OptimizerConfig& opt) {
    auto fit = fit_multiclass(ClassedSamples{{samples_p, samples_q}}, prototype, opt, {}, {"p", "q"});
    fit.method = Method::bdre;
    return fit;
}

/// TRE: K+1 independently trained BDREs over consecutive waymark pairs.
template <ScoreFamily Score>
FittedEstimator<Score> fit_tre(const Matrix& samples_p, const Matrix& samples_q, const std::vector<double>& alphas,
                               MixVariant variant, const Score& prototype, const OptimizerConfig& opt,
                               std::uint64_t waymark_seed) {
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        require(alphas[k] > 0.0 && alphas[k] < 1.0, "waymark weights must lie in (0, 1)");
        if (k > 0) require(alphas[k] > alphas[k - 1], "waymark weights must be strictly increasing");
    }
    std::vector<Matrix> chain{samples_p};
    if (!alphas.empty()) {
        auto waymarks = build_auxiliary_samples(LinearMix{alphas, variant}, samples_p, samples_q, waymark_seed);
        for (auto& w : waymarks) chain.push_back(std::move(w));
    }
    chain.push_back(samples_q);

    FittedEstimator<Score> fit;
    fit.method = Method::tre;
    fit.waymark_alphas = alphas;
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
        auto link = fit_bdre(chain[k], chain[k + 1], prototype, opt);
        link.models.front().set_labels({"m" + std::to_string(k), "m" + std::to_string(k + 1)});
        fit.models.push_back(std::move(link.models.front()));
        fit.info.push_back(std::move(link.info.front()));
    }
    return fit;
}

}  // namespace mdre
