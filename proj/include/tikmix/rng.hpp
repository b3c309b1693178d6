#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tikmix {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed splitting. A child seed depends only on the parent seed
// and the stream label, so modules never share a generator.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter);

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Uniform draw in [0, 1).
double uniform01(Rng& rng);

/// Uniform index in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Standard normal draw (Box-Muller, no cached second value).
double standard_normal(Rng& rng);

/// Logarithm of a Gamma(shape, 1) draw. Working in log space keeps tiny
/// shapes (where the draw itself underflows to zero) usable.
double log_gamma_draw(Rng& rng, double shape);

}  // namespace tikmix
