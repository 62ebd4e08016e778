#pragma once

#include <cstdint>

#include "nsa/math.hpp"

namespace nsa {

// Counter-based random stream. Draw i is a pure function of (seed, i): the
// SplitMix64 finalizer applied to seed + i * golden gamma. The same seed and
// the same sequence of draw calls produce identical values on every platform,
// independent of thread count or generator sharing elsewhere.
//
// A stream is single-owner: hand it off by value or derive a child stream,
// never share one between threads.
class RngStream {
public:
    RngStream() = default;
    explicit RngStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() {
        counter_ += 1;
        return mix(seed_ + counter_ * GAMMA);
    }

    // Uniform in [0, 1), 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + next_double() * (hi - lo);
    }

    // Uniform integer in [0, n), n >= 1.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t v =
            static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

    bool coin() { return (next_u64() >> 63) != 0; }

    // Exponential with the given scale (mean).
    double exponential(double scale) {
        // 1 - u lies in (0, 1], so the log is finite.
        return -scale * detail::portable_log(1.0 - next_double());
    }

    // Gamma with shape 2: sum of two independent exponentials.
    double gamma2(double scale) { return exponential(scale) + exponential(scale); }

    // Box-Muller, consuming exactly two draws.
    double normal(double mean, double stddev) {
        const double u1 = 1.0 - next_double();
        const double u2 = next_double();
        const double mag = std::sqrt(-2.0 * detail::portable_log(u1));
        const double z = mag * detail::portable_cos(2.0 * PI * u2);
        return mean + stddev * z;
    }

    // Independent child stream for a work item. Used to give every dataset
    // sample its own stream so generation order and worker count cannot
    // change the output.
    static RngStream derive(std::uint64_t base_seed, std::uint64_t index) {
        return RngStream(mix(base_seed ^ (mix(index + GAMMA) + GAMMA)));
    }

private:
    static constexpr std::uint64_t GAMMA = 0x9E3779B97F4A7C15ull;
    static constexpr double PI = 3.14159265358979323846;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace nsa
