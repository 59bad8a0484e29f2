#pragma once

// Deterministic random stream used by the simulators and the seeded test
// generators. The uniform core is SplitMix64 (Steele/Lea/Vigna, public
// domain); Gaussians come from Box-Muller on that stream and Poisson counts
// from Knuth's product-of-uniforms inversion. Everything is hand-coded on
// the uint64 stream, so identical seeds give identical paths on every
// platform and standard library.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "mcargraph/errors.hpp"

namespace mcargraph {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1): 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]: safe as a logarithm argument.
    double next_unit_positive() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(next_unit_positive()));
        const double theta = 2.0 * std::numbers::pi * next_unit();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Poisson count with the given mean; intended for small means (the
    // simulators call it with mean = rate * substep).
    int next_poisson(double mean) {
        if (mean < 0.0) fail(Errc::BadDriver, "Poisson mean must be non-negative");
        if (mean == 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double product = 1.0;
        do {
            ++k;
            product *= next_unit_positive();
        } while (product > limit);
        return k - 1;
    }

    // Integer uniform on [0, bound) by rejection-free modulo of the top bits;
    // bias is negligible for the small bounds used here.
    int next_below(int bound) {
        if (bound <= 0) fail(Errc::OutOfRange, "next_below bound must be positive");
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(bound));
    }

    // Uniform on [lo, hi).
    double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mcargraph
