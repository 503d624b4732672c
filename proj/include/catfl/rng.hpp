#pragma once

#include <catfl/bigint.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace catfl {

/// Deterministic random source. All randomness in the artifact flows through
/// one of these so that equal seeds reproduce byte-identical runs; raw engine
/// output is used directly because std::*_distribution is not portable.
class SeededRng {
  public:
    explicit SeededRng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double next_unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_unit();
        } while (u1 <= 0.0);
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform in [0, n) by rejection.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("next_below: empty range");
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    /// Uniform integer in [0, bound) by rejection on bit_length(bound - 1) bits.
    Int next_int_below(const Int& bound) {
        if (bound <= 0) throw std::invalid_argument("next_int_below: empty range");
        std::size_t bits = bit_length(bound - 1);
        if (bits == 0) return 0;
        Int v;
        do {
            v = 0;
            std::size_t remaining = bits;
            while (remaining >= 64) {
                v <<= 64;
                v += eng_();
                remaining -= 64;
            }
            if (remaining > 0) {
                v <<= static_cast<unsigned>(remaining);
                v += eng_() >> (64 - remaining);
            }
        } while (v >= bound);
        return v;
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Poisson(lambda) by CDF inversion.
inline std::uint64_t poisson_sample(SeededRng& rng, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("poisson_sample: negative mean");
    if (lambda == 0.0) return 0;
    double u = rng.next_unit();
    double p = std::exp(-lambda);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 100000) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

}  // namespace catfl
