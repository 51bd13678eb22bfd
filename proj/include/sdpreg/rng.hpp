#pragma once

#include <cstdint>
#include <span>

namespace sdpreg {

// Seeded pcg64-style generator (128-bit LCG state, XSL-RR output) with
// explicit sub-streams. The stream id selects the (odd) LCG increment, so
// distinct stream ids under one master seed yield distinct full-period
// sequences that never share state trajectories; this is the standard PCG
// stream guarantee and is what the replication harness relies on.
//
// A stream is single-owner: no internal locking, one instance per chain or
// replication. All draws are bitwise reproducible given (seed, stream_id).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform01();
    // Uniform on (0, 1); never returns an exact endpoint.
    double uniform01_open();
    double uniform(double lo, double hi);

    double standard_normal();
    // Parameterized by variance, not sd; variance must be strictly positive.
    double normal(double mean, double variance);

    // Gamma with given shape and rate (mean shape/rate).
    double gamma(double shape, double rate);
    // Inverse gamma with density x^{-shape-1} exp(-rate/x) * rate^shape / Gamma(shape).
    double inverse_gamma(double shape, double rate);
    double beta(double a, double b);
    // Raw Student t (variance df/(df-2) when df > 2); non-integer df allowed.
    double student_t(double df);

    bool bernoulli(double p);
    // Fair sign: +1 or -1.
    int random_sign();

    // Categorical draw from unnormalized log-weights, max-shifted before
    // exponentiation so weight ranges of hundreds of nats are handled.
    std::size_t categorical_log(std::span<const double> log_weights);
    // Categorical draw from unnormalized nonnegative weights.
    std::size_t categorical(std::span<const double> weights);

private:
    unsigned __int128 state_;
    unsigned __int128 inc_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace sdpreg
