#pragma once

// Auxiliary ("bridging") sample sets m_1..m_K built from p- and q-samples.

#include "mdre/distributions.hpp"

#include <variant>
#include <vector>

namespace mdre {

/// Samples drawn directly from a distribution that overlaps both p and q.
struct Overlapping {
    DistributionSpec spec;
};

enum class MixVariant { plain, tre_skewed };

/// Row i of class k is (1 - a_k) x_p + a_k x_q (plain) or sqrt(1 - a_k^2) x_p + a_k x_q
/// (tre_skewed), with p- and q-rows randomly paired.
struct LinearMix {
    std::vector<double> alphas;
    MixVariant variant = MixVariant::plain;
};

/// Splices the leading k*D/l coordinates of q-rows onto the trailing coordinates of
/// p-rows, one class per boundary k = 1..l-1.
struct DimensionWiseMix {
    Index chunks = 2;
};

struct AuxiliaryScheme {
    std::variant<Overlapping, LinearMix, DimensionWiseMix> value;

    AuxiliaryScheme() = default;
    template <class T>
        requires(!std::is_same_v<std::remove_cvref_t<T>, AuxiliaryScheme>)
    AuxiliaryScheme(T&& v) : value(std::forward<T>(v)) {}
};

inline void validate(const AuxiliaryScheme& scheme) {
    std::visit(overloaded{
                   [](const Overlapping& o) { validate(o.spec); },
                   [](const LinearMix& m) {
                       require(!m.alphas.empty(), "linear mixing needs at least one weight");
                       for (std::size_t i = 0; i < m.alphas.size(); ++i) {
                           require(std::isfinite(m.alphas[i]), "mixing weights must be finite");
                           for (std::size_t j = 0; j < i; ++j)
                               require(m.alphas[i] != m.alphas[j], "mixing weights must be distinct");
                           if (m.variant == MixVariant::tre_skewed)
                               require(m.alphas[i] >= 0.0 && m.alphas[i] <= 1.0,
                                       "skewed linear mixing requires weights in [0, 1]");
                       }
                   },
                   [](const DimensionWiseMix& m) { require(m.chunks >= 2, "dimension-wise mixing needs >= 2 chunks"); },
               },
               scheme.value);
}

inline Index auxiliary_count(const AuxiliaryScheme& scheme) {
    return std::visit(overloaded{
                          [](const Overlapping&) { return Index{1}; },
                          [](const LinearMix& m) { return static_cast<Index>(m.alphas.size()); },
                          [](const DimensionWiseMix& m) { return m.chunks - 1; },
                      },
                      scheme.value);
}

/// Builds the K auxiliary sample matrices, each with as many rows as samples_p.
inline std::vector<Matrix> build_auxiliary_samples(const AuxiliaryScheme& scheme, const Matrix& samples_p,
                                                   const Matrix& samples_q, std::uint64_t seed) {
    validate(scheme);
    require(samples_p.rows() >= 1, "auxiliary construction needs p-samples");
    if (samples_q.cols() != samples_p.cols())
        throw DimensionMismatch("auxiliary samples", samples_p.cols(), samples_q.cols());

    const Index n = samples_p.rows();
    const Index d = samples_p.cols();
    auto check_paired = [&] {
        require(samples_q.rows() == n, "mixing schemes need equal p and q sample counts");
    };

    std::vector<Matrix> out;
    std::visit(overloaded{
                   [&](const Overlapping& o) {
                       if (dimension(o.spec) != d) throw DimensionMismatch("overlapping auxiliary", d, dimension(o.spec));
                       out.push_back(sample(o.spec, n, mix_seed(seed, 11)));
                   },
                   [&](const LinearMix& m) {
                       check_paired();
                       Rng rng = make_rng(seed, 12);
                       const Matrix xp = permute_rows(samples_p, random_permutation(n, rng));
                       for (double a : m.alphas) {
                           const double wp = m.variant == MixVariant::plain ? 1.0 - a : std::sqrt(1.0 - a * a);
                           out.push_back(wp * xp + a * samples_q);
                       }
                   },
                   [&](const DimensionWiseMix& m) {
                       check_paired();
                       if (d % m.chunks != 0)
                           throw InvalidArgument("dimension " + std::to_string(d) + " is not divisible by " +
                                                 std::to_string(m.chunks) + " chunks");
                       Rng rng = make_rng(seed, 13);
                       const Matrix xp = permute_rows(samples_p, random_permutation(n, rng));
                       const Index width = d / m.chunks;
                       for (Index k = 1; k < m.chunks; ++k) {
                           Matrix mixed = xp;
                           mixed.leftCols(k * width) = samples_q.leftCols(k * width);
                           out.push_back(std::move(mixed));
                       }
                   },
               },
               scheme.value);
    return out;
}

/// Default waymark grid a_k = k / (K + 1), k = 1..K.
inline std::vector<double> uniform_waymarks(Index k) {
    std::vector<double> a;
    for (Index i = 1; i <= k; ++i) a.push_back(static_cast<double>(i) / static_cast<double>(k + 1));
    return a;
}

struct OverlapReport {
    Vector aux_in_pq_hull;  // per coordinate
    Vector p_in_aux_hull;
    Vector q_in_aux_hull;
};

/// Per-coordinate coverage between the auxiliary samples and the empirical
/// min/max hulls of p, q and their union.
inline OverlapReport overlap_diagnostic(const Matrix& aux, const Matrix& samples_p, const Matrix& samples_q) {
    require(aux.rows() > 0 && samples_p.rows() > 0 && samples_q.rows() > 0, "overlap diagnostic needs samples");
    const Index d = aux.cols();
    if (samples_p.cols() != d) throw DimensionMismatch("overlap diagnostic", d, samples_p.cols());
    if (samples_q.cols() != d) throw DimensionMismatch("overlap diagnostic", d, samples_q.cols());

    auto inside = [](const auto& col, double lo, double hi) {
        return static_cast<double>(((col.array() >= lo) && (col.array() <= hi)).count()) /
               static_cast<double>(col.size());
    };
    OverlapReport r{Vector(d), Vector(d), Vector(d)};
    for (Index j = 0; j < d; ++j) {
        const double lo = std::min(samples_p.col(j).minCoeff(), samples_q.col(j).minCoeff());
        const double hi = std::max(samples_p.col(j).maxCoeff(), samples_q.col(j).maxCoeff());
        const double alo = aux.col(j).minCoeff();
        const double ahi = aux.col(j).maxCoeff();
        r.aux_in_pq_hull[j] = inside(aux.col(j), lo, hi);
        r.p_in_aux_hull[j] = inside(samples_p.col(j), alo, ahi);
        r.q_in_aux_hull[j] = inside(samples_q.col(j), alo, ahi);
    }
    return r;
}

}  // namespace mdre
