#pragma once

// Per-class score functions h_c and the multinomial-logistic machinery built on
// them: logits, class posteriors, the cross-entropy loss and its gradient.

#include "mdre/core.hpp"

#include <concepts>
#include <string>
#include <vector>

namespace mdre {

using RowsRef = Eigen::Ref<const Matrix>;

/// A parametric score family. Parameters are exchanged as one flat vector.
template <class S>
concept ScoreFamily = requires(const S cs, S s, const RowsRef& x, const Vector& v) {
    { cs.dim() } -> std::convertible_to<Index>;
    { cs.num_params() } -> std::convertible_to<Index>;
    { cs.evaluate_rows(x) } -> std::convertible_to<Vector>;
    { cs.weighted_gradient(x, v) } -> std::convertible_to<Vector>;
    { cs.flatten() } -> std::convertible_to<Vector>;
    s.assign(v);
};

/// h(x) = x^T W1 x + w2 . x + b with W1 symmetric.
///
/// The flat parameter layout is the upper triangle of W1 in row-major order
/// (each off-diagonal entry stands for both W1(i,j) and W1(j,i)), then w2, then b.
class QuadraticScore {
public:
    QuadraticScore() = default;
    explicit QuadraticScore(Index dim) : w1_(Matrix::Zero(dim, dim)), w2_(Vector::Zero(dim)) {}
    QuadraticScore(Matrix w1, Vector w2, double b) : w1_(std::move(w1)), w2_(std::move(w2)), b_(b) {
        if (w1_.rows() != w1_.cols() || w1_.rows() != w2_.size())
            throw DimensionMismatch("quadratic score", w2_.size(), w1_.rows());
        symmetrize();
    }

    Index dim() const { return w2_.size(); }
    Index num_params() const { return dim() * (dim() + 1) / 2 + dim() + 1; }

    const Matrix& w1() const { return w1_; }
    const Vector& w2() const { return w2_; }
    double b() const { return b_; }

    double operator()(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != dim()) throw DimensionMismatch("quadratic score", dim(), x.size());
        return x.dot(w1_ * x) + w2_.dot(x) + b_;
    }

    Vector evaluate_rows(const RowsRef& x) const {
        if (x.cols() != dim()) throw DimensionMismatch("quadratic score", dim(), x.cols());
        if (dim() == 1) {
            const auto c = x.col(0).array();
            return ((w1_(0, 0) * c + w2_[0]) * c + b_).matrix();
        }
        Vector out = (x * w1_).cwiseProduct(x).rowwise().sum();
        out.noalias() += x * w2_;
        out.array() += b_;
        return out;
    }

    /// Gradient of sum_i weights[i] * h(x_i) with respect to the flat parameters.
    Vector weighted_gradient(const RowsRef& x, const Eigen::Ref<const Vector>& weights) const {
        if (x.cols() != dim()) throw DimensionMismatch("quadratic score", dim(), x.cols());
        const Index d = dim();
        Vector g(num_params());
        if (d == 1) {
            const auto c = x.col(0).array();
            const auto w = weights.array();
            g[0] = (w * c * c).sum();
            g[1] = (w * c).sum();
            g[2] = w.sum();
            return g;
        }
        const Matrix wx = x.array().colwise() * weights.array();
        Matrix outer(d, d);
        outer.noalias() = wx.transpose() * x;
        Index k = 0;
        for (Index i = 0; i < d; ++i) {
            g[k++] = outer(i, i);
            for (Index j = i + 1; j < d; ++j) g[k++] = outer(i, j) + outer(j, i);
        }
        g.segment(k, d) = wx.colwise().sum().transpose();
        g[k + d] = weights.sum();
        return g;
    }

    Vector flatten() const {
        const Index d = dim();
        Vector theta(num_params());
        Index k = 0;
        for (Index i = 0; i < d; ++i)
            for (Index j = i; j < d; ++j) theta[k++] = w1_(i, j);
        theta.segment(k, d) = w2_;
        theta[k + d] = b_;
        return theta;
    }

    void assign(const Vector& theta) {
        if (theta.size() != num_params()) throw DimensionMismatch("quadratic parameters", num_params(), theta.size());
        const Index d = dim();
        Index k = 0;
        for (Index i = 0; i < d; ++i)
            for (Index j = i; j < d; ++j) w1_(i, j) = w1_(j, i) = theta[k++];
        w2_ = theta.segment(k, d);
        b_ = theta[k + d];
    }

    void symmetrize() { w1_ = 0.5 * (w1_ + w1_.transpose()).eval(); }

private:
    Matrix w1_;
    Vector w2_;
    double b_ = 0.0;
};

/// Score over a finite outcome set {0, ..., S-1}; a point is a 1-vector holding the
/// outcome index.
class TabularScore {
public:
    TabularScore() = default;
    explicit TabularScore(Index outcomes) : table_(Vector::Zero(outcomes)) {}
    explicit TabularScore(Vector table) : table_(std::move(table)) {}

    Index dim() const { return 1; }
    Index num_params() const { return table_.size(); }
    Index outcomes() const { return table_.size(); }
    const Vector& table() const { return table_; }

    Index outcome_of(double v) const {
        const auto s = static_cast<Index>(v);
        if (static_cast<double>(s) != v || s < 0 || s >= outcomes())
            throw InvalidArgument("value " + std::to_string(v) + " is not in the tabular outcome set");
        return s;
    }

    double operator()(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != 1) throw DimensionMismatch("tabular score", 1, x.size());
        return table_[outcome_of(x[0])];
    }

    Vector evaluate_rows(const RowsRef& x) const {
        if (x.cols() != 1) throw DimensionMismatch("tabular score", 1, x.cols());
        Vector out(x.rows());
        for (Index i = 0; i < x.rows(); ++i) out[i] = table_[outcome_of(x(i, 0))];
        return out;
    }

    Vector weighted_gradient(const RowsRef& x, const Eigen::Ref<const Vector>& weights) const {
        Vector g = Vector::Zero(num_params());
        for (Index i = 0; i < x.rows(); ++i) g[outcome_of(x(i, 0))] += weights[i];
        return g;
    }

    Vector flatten() const { return table_; }
    void assign(const Vector& theta) {
        if (theta.size() != num_params()) throw DimensionMismatch("tabular parameters", num_params(), theta.size());
        table_ = theta;
    }

private:
    Vector table_;
};

/// Samples grouped by class: classes[c] holds the rows labelled c.
struct ClassedSamples {
    std::vector<Matrix> classes;

    Index num_classes() const { return static_cast<Index>(classes.size()); }
    Index dim() const { return classes.empty() ? 0 : classes.front().cols(); }
    Index total() const {
        Index n = 0;
        for (const auto& c : classes) n += c.rows();
        return n;
    }
};

/// C class scores plus class priors; the trained object every ratio is read from.
template <ScoreFamily Score>
class ScoreSet {
public:
    ScoreSet() = default;

    ScoreSet(std::vector<Score> scores, Vector priors = {}, std::vector<std::string> labels = {})
        : scores_(std::move(scores)), labels_(std::move(labels)) {
        const auto c = static_cast<Index>(scores_.size());
        require(c >= 2, "a score set needs at least two classes");
        for (const auto& s : scores_)
            if (s.dim() != scores_.front().dim()) throw DimensionMismatch("score set", scores_.front().dim(), s.dim());
        set_priors(priors.size() == 0 ? Vector::Constant(c, 1.0 / static_cast<double>(c)) : priors);
        if (labels_.empty())
            for (Index k = 0; k < c; ++k) labels_.push_back("class" + std::to_string(k + 1));
        require(static_cast<Index>(labels_.size()) == c, "one label per class is required");
    }

    /// `classes` identical zero-initialised scores of dimension `dim`.
    template <class... Args>
    static ScoreSet zeros(Index classes, Args&&... score_args) {
        return ScoreSet(std::vector<Score>(static_cast<std::size_t>(classes), Score(std::forward<Args>(score_args)...)));
    }

    Index num_classes() const { return static_cast<Index>(scores_.size()); }
    Index dim() const { return scores_.front().dim(); }
    const std::vector<Score>& scores() const { return scores_; }
    const Score& score(Index c) const { return scores_[static_cast<std::size_t>(c)]; }
    const Vector& priors() const { return priors_; }
    const Vector& log_priors() const { return log_priors_; }
    const std::vector<std::string>& labels() const { return labels_; }
    void set_labels(std::vector<std::string> labels) {
        require(static_cast<Index>(labels.size()) == num_classes(), "one label per class is required");
        labels_ = std::move(labels);
    }

    void set_priors(const Vector& priors) {
        require(priors.size() == num_classes(), "one prior per class is required");
        require((priors.array() > 0.0).all(), "class priors must be positive");
        require(std::abs(priors.sum() - 1.0) <= 1e-12, "class priors must sum to 1");
        priors_ = priors;
        log_priors_ = priors.array().log();
    }

    Index num_params() const {
        Index n = 0;
        for (const auto& s : scores_) n += s.num_params();
        return n;
    }

    Vector parameters() const {
        Vector theta(num_params());
        Index off = 0;
        for (const auto& s : scores_) {
            theta.segment(off, s.num_params()) = s.flatten();
            off += s.num_params();
        }
        return theta;
    }

    void set_parameters(const Vector& theta) {
        if (theta.size() != num_params()) throw DimensionMismatch("score set parameters", num_params(), theta.size());
        Index off = 0;
        for (auto& s : scores_) {
            const Index n = s.num_params();
            s.assign(theta.segment(off, n));
            off += n;
        }
    }

    /// h_c(x) for every class.
    Vector logits(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != dim()) throw DimensionMismatch("logits", dim(), x.size());
        Vector out(num_classes());
        for (Index c = 0; c < num_classes(); ++c) out[c] = score(c)(x);
        return out;
    }

    /// N x C matrix of logits for the rows of x.
    Matrix logits_rows(const RowsRef& x) const {
        if (x.cols() != dim()) throw DimensionMismatch("logits", dim(), x.cols());
        Matrix out(x.rows(), num_classes());
        for (Index c = 0; c < num_classes(); ++c) out.col(c) = score(c).evaluate_rows(x);
        return out;
    }

    /// log P(Y = c | x) via a max-shifted log-sum-exp over pi_c exp(h_c). The max
    /// logit is removed before the priors are added, so a common shift of every h_c
    /// cancels exactly whenever the shifted logits are themselves exact.
    Vector class_log_probs(const Eigen::Ref<const Vector>& x) const {
        Vector a = logits(x);
        a.array() -= a.maxCoeff();
        a += log_priors_;
        a.array() -= std::log(a.array().exp().sum());
        return a;
    }

    /// h_i(x) - h_j(x).
    double log_ratio(Index i, Index j, const Eigen::Ref<const Vector>& x) const {
        check_class(i);
        check_class(j);
        return score(i)(x) - score(j)(x);
    }

    Vector log_ratio_rows(Index i, Index j, const RowsRef& x) const {
        check_class(i);
        check_class(j);
        return score(i).evaluate_rows(x) - score(j).evaluate_rows(x);
    }

    void check_class(Index c) const {
        if (c < 0 || c >= num_classes())
            throw InvalidArgument("class index " + std::to_string(c) + " out of range [0, " +
                                  std::to_string(num_classes()) + ")");
    }

private:
    std::vector<Score> scores_;
    Vector priors_;
    Vector log_priors_;
    std::vector<std::string> labels_;
};

namespace detail {

inline constexpr Index kChunkRows = 8192;

/// Row-wise log-softmax of (logits + log priors), in place. Column-at-a-time so the
/// exp/log passes vectorise.
inline void log_softmax_rows(Matrix& a, const Vector& log_priors) {
    const Index c = a.cols();
    Vector m = a.col(0);
    for (Index k = 1; k < c; ++k) m = m.cwiseMax(a.col(k));
    Vector s = Vector::Zero(a.rows());
    for (Index k = 0; k < c; ++k) {
        a.col(k) -= m;
        a.col(k).array() += log_priors[k];
        s.array() += a.col(k).array().exp();
    }
    s = s.array().log();
    for (Index k = 0; k < c; ++k) a.col(k) -= s;
}

}  // namespace detail

/// sum_c class_weight[c] * sum_{x in class c} -log P(Y = c | x), and optionally its
/// gradient with respect to the flat parameters. Rows are processed in fixed-size
/// chunks in a fixed order, so results are bit-reproducible.
template <ScoreFamily Score>
double weighted_nll(const ScoreSet<Score>& set, const ClassedSamples& data, const Vector& class_weight,
                    Vector* gradient = nullptr) {
    const Index c_count = set.num_classes();
    if (data.num_classes() != c_count)
        throw InvalidArgument("data has " + std::to_string(data.num_classes()) + " classes, model has " +
                              std::to_string(c_count));
    std::vector<Vector> grads;
    if (gradient) {
        grads.reserve(static_cast<std::size_t>(c_count));
        for (Index k = 0; k < c_count; ++k) grads.push_back(Vector::Zero(set.score(k).num_params()));
    }
    double total = 0.0;
    for (Index c = 0; c < c_count; ++c) {
        const Matrix& xc = data.classes[static_cast<std::size_t>(c)];
        if (xc.cols() != set.dim()) throw DimensionMismatch("class samples", set.dim(), xc.cols());
        const double w = class_weight[c];
        for (Index start = 0; start < xc.rows(); start += detail::kChunkRows) {
            const Index rows = std::min(detail::kChunkRows, xc.rows() - start);
            const auto x = xc.middleRows(start, rows);
            Matrix lp = set.logits_rows(x);
            detail::log_softmax_rows(lp, set.log_priors());
            total -= w * lp.col(c).sum();
            if (gradient) {
                // d(-log P(c|x)) / dh_k = P(k|x) - [k == c]
                Matrix resid = lp.array().exp();
                resid.col(c).array() -= 1.0;
                resid *= w;
                for (Index k = 0; k < c_count; ++k)
                    grads[static_cast<std::size_t>(k)] += set.score(k).weighted_gradient(x, resid.col(k));
            }
        }
    }
    if (gradient) {
        gradient->resize(set.num_params());
        Index off = 0;
        for (const auto& g : grads) {
            gradient->segment(off, g.size()) = g;
            off += g.size();
        }
    }
    return total;
}

/// Per-class weights pi_c / N_c turning weighted_nll into the empirical loss.
template <ScoreFamily Score>
Vector loss_weights(const ScoreSet<Score>& set, const ClassedSamples& data) {
    Vector w(set.num_classes());
    for (Index c = 0; c < set.num_classes(); ++c) {
        const Index n = data.classes[static_cast<std::size_t>(c)].rows();
        if (n == 0) throw InvalidArgument("class " + std::to_string(c) + " has no samples");
        w[c] = set.priors()[c] / static_cast<double>(n);
    }
    return w;
}

/// Empirical loss -sum_c pi_c mean_{x in c} log P(Y = c | x).
template <ScoreFamily Score>
double loss(const ScoreSet<Score>& set, const ClassedSamples& data) {
    return weighted_nll(set, data, loss_weights(set, data));
}

/// Analytic gradient of `loss` with respect to ScoreSet::parameters().
template <ScoreFamily Score>
Vector loss_gradient(const ScoreSet<Score>& set, const ClassedSamples& data) {
    Vector g;
    weighted_nll(set, data, loss_weights(set, data), &g);
    return g;
}

/// Fraction of each class's rows whose most probable class is the true one.
template <ScoreFamily Score>
Vector class_accuracy(const ScoreSet<Score>& set, const ClassedSamples& data) {
    Vector acc(set.num_classes());
    for (Index c = 0; c < set.num_classes(); ++c) {
        const Matrix& xc = data.classes[static_cast<std::size_t>(c)];
        if (xc.rows() == 0) {
            acc[c] = 0.0;
            continue;
        }
        Matrix a = set.logits_rows(xc);
        a.rowwise() += set.log_priors().transpose();
        Index hits = 0;
        for (Index i = 0; i < a.rows(); ++i) {
            Index best = 0;
            a.row(i).maxCoeff(&best);
            hits += best == c;
        }
        acc[c] = static_cast<double>(hits) / static_cast<double>(xc.rows());
    }
    return acc;
}

using QuadraticScoreSet = ScoreSet<QuadraticScore>;
using TabularScoreSet = ScoreSet<TabularScore>;

}  // namespace mdre
