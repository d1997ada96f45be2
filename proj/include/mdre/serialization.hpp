#pragma once

// JSON forms of distribution specs, auxiliary schemes, optimiser settings and fitted
// models, plus the canonical hash used to tag results.

#include "mdre/auxiliary.hpp"
#include "mdre/hmc.hpp"
#include "mdre/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

namespace mdre {

using Json = nlohmann::json;

/// FNV-1a over the compact dump. nlohmann objects keep keys sorted, so the dump is
/// canonical.
inline std::uint64_t config_hash(const Json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex_hash(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InvalidArgument("malformed JSON in '" + path + "': " + e.what());
    }
}

namespace detail {

inline const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
    return j.at(key);
}

inline Json to_json_vector(const Vector& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidArgument("expected a numeric array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
    return v;
}

inline Json to_json_matrix(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json_vector(m.row(i).transpose()));
    return rows;
}

inline Matrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty()) throw InvalidArgument("expected a non-empty array of rows");
    const auto r = static_cast<Index>(j.size());
    const auto c = static_cast<Index>(j[0].size());
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i) {
        const Vector row = vector_from_json(j[static_cast<std::size_t>(i)]);
        if (row.size() != c) throw InvalidArgument("ragged matrix rows");
        m.row(i) = row.transpose();
    }
    return m;
}

// A vector field may be an array, or a number together with "dim".
inline Vector vector_field(const Json& j, const char* key) {
    const Json& v = field(j, key);
    if (v.is_number()) {
        const auto d = j.value("dim", Index{1});
        return Vector::Constant(d, v.get<double>());
    }
    return vector_from_json(v);
}

inline Json to_json(const Covariance& c) {
    return std::visit(overloaded{
                          [](const Isotropic& s) { return Json{{"type", "isotropic"}, {"variance", s.variance}}; },
                          [](const Diagonal& s) { return Json{{"type", "diagonal"}, {"variances", to_json_vector(s.variances)}}; },
                          [](const Block2x2& s) { return Json{{"type", "block2x2"}, {"rho", s.rho}}; },
                          [](const FullCovariance& s) { return Json{{"type", "full"}, {"matrix", to_json_matrix(s.matrix)}}; },
                      },
                      c);
}

inline Covariance covariance_from_json(const Json& j) {
    const auto type = field(j, "type").get<std::string>();
    if (type == "isotropic") return Isotropic{field(j, "variance").get<double>()};
    if (type == "diagonal") return Diagonal{vector_from_json(field(j, "variances"))};
    if (type == "block2x2") return Block2x2{field(j, "rho").get<double>()};
    if (type == "full") return FullCovariance{matrix_from_json(field(j, "matrix"))};
    throw InvalidArgument("unknown covariance type '" + type + "'");
}

}  // namespace detail

inline Json to_json(const DistributionSpec& spec) {
    using detail::to_json_vector;
    return std::visit(
        overloaded{
            [](const Gaussian& g) {
                return Json{{"kind", "gaussian"}, {"mean", to_json_vector(g.mean)}, {"cov", detail::to_json(g.cov)}};
            },
            [](const Cauchy& c) {
                return Json{{"kind", "cauchy"}, {"location", to_json_vector(c.location)}, {"scale", to_json_vector(c.scale)}};
            },
            [](const StudentT& t) {
                return Json{{"kind", "student_t"},
                            {"location", to_json_vector(t.location)},
                            {"scale", detail::to_json(t.scale)},
                            {"df", t.df}};
            },
            [](const TruncatedNormal& t) {
                return Json{{"kind", "truncated_normal"}, {"loc", t.loc}, {"scale", t.scale}, {"low", t.low}, {"high", t.high}};
            },
            [](const Mixture& m) {
                Json comps = Json::array();
                for (const auto& c : m.components) comps.push_back(to_json(c));
                return Json{{"kind", "mixture"}, {"weights", m.weights}, {"components", comps}};
            },
        },
        spec.value);
}

inline DistributionSpec spec_from_json(const Json& j) {
    using detail::field;
    const auto kind = field(j, "kind").get<std::string>();
    DistributionSpec spec;
    if (kind == "gaussian") {
        Gaussian g{detail::vector_field(j, "mean"), Isotropic{1.0}};
        if (j.contains("cov")) g.cov = detail::covariance_from_json(j.at("cov"));
        spec = g;
    } else if (kind == "cauchy") {
        spec = Cauchy{detail::vector_field(j, "location"), detail::vector_field(j, "scale")};
    } else if (kind == "student_t") {
        StudentT t{detail::vector_field(j, "location"), Isotropic{1.0}, field(j, "df").get<double>()};
        if (j.contains("scale")) t.scale = detail::covariance_from_json(j.at("scale"));
        spec = t;
    } else if (kind == "truncated_normal") {
        spec = TruncatedNormal{field(j, "loc").get<double>(), field(j, "scale").get<double>(), field(j, "low").get<double>(),
                               field(j, "high").get<double>()};
    } else if (kind == "mixture") {
        Mixture m;
        m.weights = field(j, "weights").get<std::vector<double>>();
        for (const auto& c : field(j, "components")) m.components.push_back(spec_from_json(c));
        spec = m;
    } else {
        throw InvalidArgument("unknown distribution kind '" + kind + "'");
    }
    validate(spec);
    return spec;
}

inline std::string to_string(MixVariant v) { return v == MixVariant::plain ? "plain" : "tre_skewed"; }

inline MixVariant parse_mix_variant(const std::string& s) {
    if (s == "plain") return MixVariant::plain;
    if (s == "tre_skewed") return MixVariant::tre_skewed;
    throw InvalidArgument("unknown linear-mix variant '" + s + "'");
}

inline Json to_json(const AuxiliaryScheme& scheme) {
    return std::visit(overloaded{
                          [](const Overlapping& o) { return Json{{"kind", "overlapping"}, {"spec", to_json(o.spec)}}; },
                          [](const LinearMix& l) {
                              return Json{{"kind", "linear_mix"}, {"alphas", l.alphas}, {"variant", to_string(l.variant)}};
                          },
                          [](const DimensionWiseMix& d) { return Json{{"kind", "dimension_wise"}, {"chunks", d.chunks}}; },
                      },
                      scheme.value);
}

inline AuxiliaryScheme scheme_from_json(const Json& j) {
    using detail::field;
    const auto kind = field(j, "kind").get<std::string>();
    AuxiliaryScheme s;
    if (kind == "overlapping") {
        s = Overlapping{spec_from_json(field(j, "spec"))};
    } else if (kind == "linear_mix") {
        s = LinearMix{field(j, "alphas").get<std::vector<double>>(), parse_mix_variant(j.value("variant", "plain"))};
    } else if (kind == "dimension_wise") {
        s = DimensionWiseMix{field(j, "chunks").get<Index>()};
    } else {
        throw InvalidArgument("unknown auxiliary scheme '" + kind + "'");
    }
    validate(s);
    return s;
}

inline Json to_json(const OptimizerConfig& o) {
    return Json{{"learning_rate", o.learning_rate},
                {"beta1", o.beta1},
                {"beta2", o.beta2},
                {"epsilon", o.epsilon},
                {"epochs", o.epochs},
                {"batch", o.batch},
                {"init", o.init == InitKind::zeros ? "zeros" : "gaussian"},
                {"init_std", o.init_std},
                {"validation_fraction", o.validation_fraction},
                {"standardize", o.standardize}};
}

/// Missing fields keep the defaults of `base`.
inline OptimizerConfig optimizer_from_json(const Json& j, OptimizerConfig base = {}) {
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.beta1 = j.value("beta1", base.beta1);
    base.beta2 = j.value("beta2", base.beta2);
    base.epsilon = j.value("epsilon", base.epsilon);
    base.epochs = j.value("epochs", base.epochs);
    base.batch = j.value("batch", base.batch);
    if (j.contains("init")) {
        const auto s = j.at("init").get<std::string>();
        if (s != "zeros" && s != "gaussian") throw InvalidArgument("init must be 'zeros' or 'gaussian'");
        base.init = s == "zeros" ? InitKind::zeros : InitKind::gaussian;
    }
    base.init_std = j.value("init_std", base.init_std);
    base.validation_fraction = j.value("validation_fraction", base.validation_fraction);
    base.standardize = j.value("standardize", base.standardize);
    base.validate();
    return base;
}

inline Json to_json(const HmcConfig& c) {
    return Json{{"step_size", c.step_size},
                {"leapfrog_steps", c.leapfrog_steps},
                {"n_samples", c.n_samples},
                {"burn_in", c.burn_in},
                {"prior_std", c.prior_std}};
}

inline HmcConfig hmc_from_json(const Json& j, HmcConfig base = {}) {
    base.step_size = j.value("step_size", base.step_size);
    base.leapfrog_steps = j.value("leapfrog_steps", base.leapfrog_steps);
    base.n_samples = j.value("n_samples", base.n_samples);
    base.burn_in = j.value("burn_in", base.burn_in);
    base.prior_std = j.value("prior_std", base.prior_std);
    base.validate();
    return base;
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline Json to_json(const QuadraticScore& s) {
    return Json{{"w1", detail::to_json_matrix(s.w1())}, {"w2", detail::to_json_vector(s.w2())}, {"b", s.b()}};
}

inline QuadraticScore quadratic_from_json(const Json& j) {
    const Vector w2 = detail::vector_from_json(detail::field(j, "w2"));
    const Matrix w1 = w2.size() == 0 ? Matrix(0, 0) : detail::matrix_from_json(detail::field(j, "w1"));
    return QuadraticScore(w1, w2, detail::field(j, "b").get<double>());
}

inline Json to_json(const ScoreSet<QuadraticScore>& set) {
    Json scores = Json::array();
    for (const auto& s : set.scores()) scores.push_back(to_json(s));
    return Json{{"dim", set.dim()},
                {"classes", set.num_classes()},
                {"class_labels", set.labels()},
                {"priors", detail::to_json_vector(set.priors())},
                {"scores", scores}};
}

inline ScoreSet<QuadraticScore> score_set_from_json(const Json& j) {
    std::vector<QuadraticScore> scores;
    for (const auto& s : detail::field(j, "scores")) scores.push_back(quadratic_from_json(s));
    const auto dim = detail::field(j, "dim").get<Index>();
    for (const auto& s : scores)
        if (s.dim() != dim) throw DimensionMismatch("model file score", dim, s.dim());
    auto labels = j.value("class_labels", std::vector<std::string>{});
    return ScoreSet<QuadraticScore>(std::move(scores), detail::vector_from_json(detail::field(j, "priors")), std::move(labels));
}

inline Json to_json(const TrainingInfo& info) {
    return Json{{"initial_loss", info.initial_loss},
                {"final_loss", info.final_loss},
                {"best_epoch", info.best_epoch},
                {"epochs_run", info.epochs_run},
                {"train_accuracy", detail::to_json_vector(info.train_accuracy)},
                {"validation_accuracy", detail::to_json_vector(info.validation_accuracy)},
                {"seed", info.seed}};
}

/// A fitted estimator as a model file. TRE fits list their links in chain order.
inline Json to_json(const FittedEstimator<QuadraticScore>& fit, const std::string& config_hash_hex = {}) {
    Json j{{"format", "mdre-model"}, {"version", 1}, {"method", to_string(fit.method)}, {"dim", fit.dim()}};
    if (!config_hash_hex.empty()) j["config_hash"] = config_hash_hex;
    if (fit.method == Method::tre) {
        Json links = Json::array();
        for (const auto& m : fit.models) links.push_back(to_json(m));
        j["links"] = links;
        j["waymark_alphas"] = fit.waymark_alphas;
    } else {
        j["model"] = to_json(fit.models.front());
    }
    Json info = Json::array();
    for (const auto& i : fit.info) info.push_back(to_json(i));
    j["training"] = info;
    return j;
}

inline FittedEstimator<QuadraticScore> fitted_from_json(const Json& j) {
    if (j.value("format", "") != "mdre-model") throw InvalidArgument("not an mdre model file");
    FittedEstimator<QuadraticScore> fit;
    fit.method = parse_method(detail::field(j, "method").get<std::string>());
    if (fit.method == Method::tre) {
        for (const auto& l : detail::field(j, "links")) fit.models.push_back(score_set_from_json(l));
        fit.waymark_alphas = j.value("waymark_alphas", std::vector<double>{});
    } else {
        fit.models.push_back(score_set_from_json(detail::field(j, "model")));
    }
    if (fit.models.empty()) throw InvalidArgument("model file holds no classifier");
    fit.info.resize(fit.models.size());
    return fit;
}

}  // namespace mdre
