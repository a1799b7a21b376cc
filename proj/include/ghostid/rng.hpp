// SPDX-License-Identifier: Apache-2.0
//
// Counter-based random number generation. Monte Carlo trials derive
// independent streams from (seed, stream index), so results are bit-identical
// for any parallel schedule. std:: distributions are avoided on purpose:
// their output is implementation defined.
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "ghostid/common.hpp"

namespace ghostid {

namespace detail {
// Finalizer from the splitmix64 generator; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

// splitmix64 stream. The state advances by a fixed odd constant and the
// output is a bijective mix of the state, which makes the sequence a pure
// function of (initial state, counter).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(detail::mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

    // Independent stream for a trial index under a common experiment seed.
    Rng(std::uint64_t seed, std::uint64_t stream)
        : state_(detail::mix64(detail::mix64(seed) ^ detail::mix64(stream * 0xda3e39cb94b95bdbULL + 1))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Uniform on (0, 1]; never returns 0 so it is safe under log().
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. The spare value is cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * kPi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Circular complex normal CN(0, variance): real and imaginary parts are
    // independent N(0, variance / 2).
    Complex next_cnormal(double variance) {
        if (variance < 0.0) throw InvalidArgument("complex normal variance must be >= 0");
        if (variance == 0.0) return Complex(0.0, 0.0);
        const double s = std::sqrt(variance / 2.0);
        const double re = s * next_normal();
        const double im = s * next_normal();
        return Complex(re, im);
    }

    CVec next_cnormal_vector(int n, double variance) {
        CVec v(n);
        for (int i = 0; i < n; ++i) v[i] = next_cnormal(variance);
        return v;
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ghostid
