#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace steatosis {

using Rng = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Derives an independent seed for a named substream. Every stochastic
// decision (tree, fold, candidate, round) pulls from its own substream so
// the result does not depend on evaluation order.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return Rng(substream_seed(seed, stream, index));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller draw; unlike std::normal_distribution the sequence is the same
// on every standard library.
inline double standard_normal(Rng& rng) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace steatosis
