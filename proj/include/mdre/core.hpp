#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace mdre {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(const std::string& what, Index expected, Index got)
        : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

// splitmix64 finalizer; used to derive independent stream seeds from (seed, stream).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(mix_seed(seed, stream));
}

/// Uniform draw in the open interval (0, 1).
inline double uniform_open(Rng& rng) {
    // 53 random bits, offset by half a ulp so neither endpoint is reachable.
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Max-shifted log-sum-exp. Returns -inf when every term is -inf.
template <class Values>
double log_sum_exp(const Values& v) {
    const double m = v.maxCoeff();
    if (m == kNegInf) return kNegInf;
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

/// Sum that keeps -inf as -inf instead of producing NaN from (-inf) + (+inf) mixes
/// of finite terms. Only finite and -inf inputs are expected.
inline double add_log(double a, double b) {
    if (a == kNegInf || b == kNegInf) return kNegInf;
    return a + b;
}

/// Uniformly random permutation of 0..n-1 (Fisher-Yates on our own draws so the
/// result does not depend on the standard library's shuffle implementation).
inline std::vector<Index> random_permutation(Index n, Rng& rng) {
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

inline Matrix permute_rows(const Matrix& x, const std::vector<Index>& perm) {
    Matrix out(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace mdre
