#pragma once

#include "netgof/types.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>

namespace netgof {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a list of integer keys.
template <class... Keys>
std::uint64_t derive_seed(std::uint64_t seed, Keys... keys) {
  std::uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(keys))), ...);
  return h;
}

inline std::uint64_t bits_of(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

/// Independent engine per (seed, stream tag, pair): adding pairs never perturbs other pairs' draws.
inline std::mt19937_64 pair_stream(std::uint64_t seed, std::uint64_t tag, Pair p) {
  return std::mt19937_64(derive_seed(seed, tag, static_cast<std::uint64_t>(p.i), static_cast<std::uint64_t>(p.j)));
}

inline std::mt19937_64 keyed_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t key = 0) {
  return std::mt19937_64(derive_seed(seed, tag, key));
}

// Stream tags.
inline constexpr std::uint64_t kTagCox = 1;
inline constexpr std::uint64_t kTagAdoptionNetwork = 2;
inline constexpr std::uint64_t kTagAdoptionPerception = 3;
inline constexpr std::uint64_t kTagAdoptionMembership = 4;
inline constexpr std::uint64_t kTagTorus = 5;
inline constexpr std::uint64_t kTagScenario = 6;
inline constexpr std::uint64_t kTagRelabel = 7;

/// Uniform on [0, 1) with 53 random bits, independent of the standard library's distribution code.
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

/// Exp(rate) by inversion.
inline double exponential(std::mt19937_64& g, double rate) { return -std::log1p(-uniform01(g)) / rate; }

/// Standard normal by Box-Muller (one draw per call, the partner is discarded for stream simplicity).
inline double standard_normal(std::mt19937_64& g) {
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace netgof
