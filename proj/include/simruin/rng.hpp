#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace simruin::mc {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++. Streams are keyed rather than jumped: every (seed, stream,
// substream) triple hashes to its own starting state, so the numbers a path
// sees never depend on how paths are split across threads.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    Xoshiro256pp(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
        std::uint64_t h = seed;
        h = splitmix64(h) ^ stream;
        h = splitmix64(h) ^ substream;
        for (auto& word : s_) word = splitmix64(h);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

using Rng = Xoshiro256pp;

/// Uniform on the open interval (0, 1), 53-bit resolution.
inline double uniform_open(Rng& rng) { return ((rng() >> 11) + 0.5) * 0x1.0p-53; }

// Boost.Random's ziggurat; the distribution object carries no state.
inline double standard_normal(Rng& rng) { return boost::random::normal_distribution<double>()(rng); }

/// log of a Gamma(shape, 1) variate. For shape < 1 uses
/// Gamma(shape) = Gamma(1 + shape) U^(1/shape), kept in logs since the
/// variate underflows for the tiny shapes of fine time steps.
inline double log_gamma_variate(Rng& rng, double shape) {
    if (shape >= 1.0) return std::log(boost::random::gamma_distribution<double>(shape)(rng));
    const double g = boost::random::gamma_distribution<double>(1.0 + shape)(rng);
    return std::log(g) + std::log(uniform_open(rng)) / shape;
}

/// Gamma(shape, rate) variate; exactly 0 when it underflows.
inline double gamma_variate(Rng& rng, double shape, double rate) {
    return std::exp(log_gamma_variate(rng, shape)) / rate;
}

/// Chambers-Mallows-Stuck draw of S_alpha(1, beta, 0) for alpha != 1.
inline double stable_variate(Rng& rng, double alpha, double beta) {
    constexpr double kHalfPi = 1.57079632679489661923;
    const double v = kHalfPi * (2.0 * uniform_open(rng) - 1.0);
    const double w = boost::random::exponential_distribution<double>()(rng);
    const double t = beta * std::tan(kHalfPi * alpha);
    const double b = std::atan(t) / alpha;
    const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
    const double av = alpha * (v + b);
    return s * std::sin(av) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos(v - av) / w, (1.0 - alpha) / alpha);
}

}  // namespace simruin::mc
