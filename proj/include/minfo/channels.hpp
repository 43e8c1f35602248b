#pragma once
// Sources, the AWGN channel, the permutation-based marginal sampler, PSK
// codebooks and the closed-form mutual-information oracle. All information
// quantities are in nats. SNR convention: unit signal power per dimension,
// so SNR = 1/sigma^2 and sigma^2 = 10^(-snr_db/10).

#include "minfo/common.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace minfo::chan {

inline constexpr double kPi = 3.14159265358979323846;

struct DiscreteInput {
    int M = 8;           // alphabet size, M = 2^source_bits
    int source_bits = 3; // raw fair bits fed to the generator
};

struct ChannelSpec {
    int d = 2;             // channel dimension
    double sigma2 = 1.0;   // noise variance per dimension
    std::optional<DiscreteInput> discrete;  // continuous Gaussian input when empty

    void validate() const {
        if (d < 1) throw std::invalid_argument("ChannelSpec: d must be >= 1");
        if (!(sigma2 > 0.0)) throw std::invalid_argument("ChannelSpec: sigma2 must be > 0");
        if (discrete) {
            if (discrete->source_bits < 1)
                throw std::invalid_argument("ChannelSpec: source_bits must be >= 1");
            if (discrete->M != (1 << discrete->source_bits))
                throw std::invalid_argument("ChannelSpec: M must equal 2^source_bits");
        }
    }
};

// Paired joint samples plus a permuted copy of the outputs; y_marginal holds
// the same rows as y_joint in shuffled order.
struct SampleBatch {
    Matrix x;
    Matrix y_joint;
    Matrix y_marginal;
};

inline double snr_db_to_sigma2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }
inline double sigma2_to_snr_db(double sigma2) { return -10.0 * std::log10(sigma2); }

// I(X;Y) = (d/2) ln(1 + 1/sigma^2) for X ~ N(0, I_d), Y = X + N(0, sigma^2 I_d).
inline double closed_form_awgn_mi(int d, double sigma2) {
    if (d < 1 || !(sigma2 > 0.0)) throw std::invalid_argument("closed_form_awgn_mi: bad arguments");
    return 0.5 * static_cast<double>(d) * std::log1p(1.0 / sigma2);
}

inline Matrix sample_gaussian_source(int d, int n, std::uint64_t seed) {
    if (d < 1 || n < 1) throw std::invalid_argument("sample_gaussian_source: d, n must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(n, d);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c) x(r, c) = g(rng);
    return x;
}

// i.i.d. fair bits in {0,1}^source_bits.
inline Matrix sample_discrete_source(int source_bits, int n, std::uint64_t seed) {
    if (source_bits < 1 || n < 1)
        throw std::invalid_argument("sample_discrete_source: bits, n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> bit(0, 1);
    Matrix z(n, source_bits);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < source_bits; ++c) z(r, c) = static_cast<double>(bit(rng));
    return z;
}

inline Matrix awgn_transmit(const Matrix& x, double sigma2, std::uint64_t seed) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("awgn_transmit: sigma2 must be > 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const double sigma = std::sqrt(sigma2);
    Matrix y(x.rows(), x.cols());
    for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c) y(r, c) = x(r, c) + sigma * g(rng);
    return y;
}

// Uniform random permutation of 0..n-1 (Fisher-Yates). A row may map to
// itself; that is the paper's shuffle, not a derangement.
inline std::vector<int> shuffle_permutation(int n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("shuffle_permutation: need n >= 2");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> u(0, i);
        std::swap(perm[i], perm[u(rng)]);
    }
    return perm;
}

inline Matrix apply_permutation(const Matrix& y, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != y.rows())
        throw std::invalid_argument("apply_permutation: size mismatch");
    Matrix out(y.rows(), y.cols());
    for (int r = 0; r < y.rows(); ++r) out.row(r) = y.row(perm[r]);
    return out;
}

inline Matrix shuffle_marginal(const Matrix& y_joint, std::uint64_t seed) {
    return apply_permutation(y_joint, shuffle_permutation(static_cast<int>(y_joint.rows()), seed));
}

// Gaussian source -> AWGN -> shuffled marginal, with sub-seeds derived per role.
inline SampleBatch draw_gaussian_awgn_batch(int d, double sigma2, int n, std::uint64_t seed) {
    SampleBatch b;
    b.x = sample_gaussian_source(d, n, derive_seed(seed, 1));
    b.y_joint = awgn_transmit(b.x, sigma2, derive_seed(seed, 2));
    b.y_marginal = shuffle_marginal(b.y_joint, derive_seed(seed, 3));
    return b;
}

struct Codebook {
    Matrix points;  // M x d

    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }

    // Per-dimension average power, sum ||c_i||^2 / (M*d). The unit-power
    // contract is per dimension, matching X ~ N(0, I).
    double mean_square_power() const {
        if (points.size() == 0) return 0.0;
        return points.squaredNorm() / static_cast<double>(points.size());
    }
};

// M equally spaced unit-circle points, d = 2. Unit average power exactly.
inline Codebook psk_codebook(int M) {
    if (M < 2) throw std::invalid_argument("psk_codebook: M must be >= 2");
    Codebook cb;
    cb.points.resize(M, 2);
    for (int k = 0; k < M; ++k) {
        const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(M);
        cb.points(k, 0) = std::cos(phi);
        cb.points(k, 1) = std::sin(phi);
    }
    return cb;
}

namespace detail {

inline void write_double(std::ostream& os, double v) {
    if (std::isnan(v)) {
        os << "nan";
        return;
    }
    if (std::isinf(v)) {
        os << (v > 0 ? "inf" : "-inf");
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    os << buf;
}

}  // namespace detail

// CSV with header "index,x1,...,xd". Extra leading '#' comment lines may be
// passed by the caller (version/seed provenance).
inline void write_codebook_csv(std::ostream& os, const Codebook& cb,
                               const std::vector<std::string>& comment_lines = {}) {
    for (const auto& line : comment_lines) os << "# " << line << "\n";
    os << "index";
    for (int c = 0; c < cb.dim(); ++c) os << ",x" << (c + 1);
    os << "\n";
    for (int r = 0; r < cb.size(); ++r) {
        os << r;
        for (int c = 0; c < cb.dim(); ++c) {
            os << ",";
            detail::write_double(os, cb.points(r, c));
        }
        os << "\n";
    }
}

}  // namespace minfo::chan
