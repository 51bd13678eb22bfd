#include "sdpreg/rng.hpp"

#include <cmath>
#include <limits>

#include "sdpreg/errors.hpp"

namespace sdpreg {

namespace {

using u128 = unsigned __int128;

constexpr u128 kPcgMult = (u128{0x2360ed051fc65da4ULL} << 64) | 0x4385df649fccf645ULL;

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t s = seed;
    const std::uint64_t state_hi = splitmix64(s);
    const std::uint64_t state_lo = splitmix64(s);
    std::uint64_t t = stream_id ^ 0xda3e39cb94b95bdbULL;
    const std::uint64_t seq_hi = splitmix64(t);
    const std::uint64_t seq_lo = splitmix64(t);

    const u128 init_state = (u128{state_hi} << 64) | state_lo;
    const u128 init_seq = (u128{seq_hi} << 64) | seq_lo;

    state_ = 0;
    inc_ = (init_seq << 1) | 1;  // increment must be odd
    next_u64();
    state_ += init_state;
    next_u64();
}

std::uint64_t RngStream::next_u64() {
    state_ = state_ * kPcgMult + inc_;
    const std::uint64_t xored = static_cast<std::uint64_t>((state_ >> 64) ^ state_);
    const unsigned rot = static_cast<unsigned>(state_ >> 122);
    return (xored >> rot) | (xored << ((64u - rot) & 63u));
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform01_open() {
    double u;
    do {
        u = uniform01();
    } while (u == 0.0);
    return u;
}

double RngStream::uniform(double lo, double hi) {
    require(lo < hi && std::isfinite(lo) && std::isfinite(hi), "parameter",
            "uniform: requires finite lo < hi");
    return lo + (hi - lo) * uniform01();
}

double RngStream::standard_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    // Marsaglia polar method; the rejected pairs keep the sequence deterministic.
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * f;
    has_spare_ = true;
    return u * f;
}

double RngStream::normal(double mean, double variance) {
    require(variance > 0.0 && std::isfinite(variance) && std::isfinite(mean), "parameter",
            "normal: variance must be finite and > 0");
    return mean + std::sqrt(variance) * standard_normal();
}

double RngStream::gamma(double shape, double rate) {
    require(shape > 0.0 && rate > 0.0 && std::isfinite(shape) && std::isfinite(rate), "parameter",
            "gamma: shape and rate must be finite and > 0");
    if (shape < 1.0) {
        // Boost the shape, then apply the power correction.
        const double g = gamma(shape + 1.0, rate);
        return g * std::pow(uniform01_open(), 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = standard_normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01_open();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double RngStream::inverse_gamma(double shape, double rate) {
    return 1.0 / gamma(shape, rate);
}

double RngStream::beta(double a, double b) {
    require(a > 0.0 && b > 0.0, "parameter", "beta: both shapes must be > 0");
    const double ga = gamma(a, 1.0);
    const double gb = gamma(b, 1.0);
    const double s = ga + gb;
    if (s <= 0.0) return 0.5;  // double underflow of both gammas; a, b both tiny
    return ga / s;
}

double RngStream::student_t(double df) {
    require(df > 0.0 && std::isfinite(df), "parameter", "student_t: df must be finite and > 0");
    const double z = standard_normal();
    const double chi2 = gamma(0.5 * df, 0.5);
    return z / std::sqrt(chi2 / df);
}

bool RngStream::bernoulli(double p) {
    require(p >= 0.0 && p <= 1.0, "parameter", "bernoulli: p must lie in [0, 1]");
    return uniform01() < p;
}

int RngStream::random_sign() {
    return (next_u64() & 1u) ? 1 : -1;
}

std::size_t RngStream::categorical_log(std::span<const double> log_weights) {
    require(!log_weights.empty(), "parameter", "categorical: empty weight vector");
    double max_lw = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights) {
        if (lw > max_lw) max_lw = lw;
    }
    require(std::isfinite(max_lw), "parameter", "categorical: no finite log-weight");
    double total = 0.0;
    for (double lw : log_weights) total += std::exp(lw - max_lw);
    const double u = uniform01() * total;
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < log_weights.size(); ++k) {
        cum += std::exp(log_weights[k] - max_lw);
        if (u < cum) return k;
    }
    return log_weights.size() - 1;
}

std::size_t RngStream::categorical(std::span<const double> weights) {
    require(!weights.empty(), "parameter", "categorical: empty weight vector");
    double total = 0.0;
    for (double w : weights) {
        require(w >= 0.0 && std::isfinite(w), "parameter", "categorical: weights must be finite and >= 0");
        total += w;
    }
    require(total > 0.0, "parameter", "categorical: all weights are zero");
    const double u = uniform01() * total;
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
        cum += weights[k];
        if (u < cum) return k;
    }
    return weights.size() - 1;
}

}  // namespace sdpreg
