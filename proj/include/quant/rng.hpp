#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

namespace quant {

// All randomness in the library flows through these helpers on top of
// std::mt19937_64. The standard distributions are implementation-defined,
// so seeded runs would not reproduce across standard libraries; these do.
using Rng = std::mt19937_64;

// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; one draw consumes two uniforms.
inline double gaussian(Rng& rng) {
    double u1;
    do {
        u1 = uniform01(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform01(rng);
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Uniform k-subset of {0,...,n-1} without replacement (Floyd's method),
// returned sorted ascending.
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k) {
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(k * 2);
    for (std::size_t i = n - k; i < n; ++i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(rng, i + 1));
        if (!chosen.insert(j).second) chosen.insert(i);
    }
    std::vector<std::size_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace quant
