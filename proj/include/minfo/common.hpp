#pragma once
// Shared basics: matrix aliases, seed-stream derivation, hashing, stable
// log-mean-exp. Everything downstream is deterministic given explicit seeds.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace minfo {

using Matrix = Eigen::MatrixXd;     // rows = samples
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kLn2 = 0.69314718055994530942;

// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent seed stream from a master seed and up to three
// stream tags (trial index, iteration, role, ...). Pure integer mixing, so
// results do not depend on evaluation order or platform.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(master ^ 0x5bd1e995u);
    s = splitmix64(s ^ splitmix64(a));
    s = splitmix64(s ^ splitmix64(b ^ 0x9e3779b9u));
    s = splitmix64(s ^ splitmix64(c ^ 0x85ebca6bu));
    return s;
}

// FNV-1a 64-bit; used for config hashes embedded in output headers.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

// log(mean(exp(v))) with max-shift. Propagates +inf/NaN instead of masking
// them: overflowed discriminator outputs must surface in failure accounting.
inline double log_mean_exp(const Vector& v) {
    if (v.size() == 0) return -std::numeric_limits<double>::infinity();
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;  // +inf, -inf (all entries) or NaN
    const double s = (v.array() - m).exp().mean();
    return m + std::log(s);
}

inline double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = a > b ? a : b;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace minfo
