#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace oryon {

using Rng = std::mt19937_64;

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent sub-stream for a named consumer ("matchgen", "registration", ...).
constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return SplitMix64(seed ^ SplitMix64(h));
}

// Counter-based sub-stream, e.g. one per registration hypothesis.
constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t counter) {
  return SplitMix64(SplitMix64(seed) + SplitMix64(counter ^ 0x5851f42d4c957f2dULL));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double Uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * UniformUnit(rng);
}

// Uniform integer in [0, n).
inline std::uint64_t UniformIndex(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(UniformUnit(rng) * static_cast<double>(n)) % n;
}

inline double Gaussian(Rng& rng) {
  // Box-Muller on our own uniforms so streams do not depend on the
  // standard library's distribution implementation.
  double u1 = UniformUnit(rng);
  double u2 = UniformUnit(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace oryon
