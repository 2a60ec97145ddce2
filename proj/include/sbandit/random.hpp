#pragma once

#include <cstdint>
#include <random>

namespace sbandit {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based hash of (seed, stream, counter); the same triple always
/// yields the same word.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t counter) {
  return mix64(mix64(mix64(seed) ^ stream) ^ counter);
}

/// Uniform in [0, 1) from the top 53 bits.
constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Standard normal draw keyed by (seed, stream, counter), Box–Muller.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Sequential stream for arm sampling and instance generation. The engine
/// output is fixed by the standard; the helpers below avoid
/// implementation-defined distributions so runs are reproducible across
/// standard libraries.
using Rng = std::mt19937_64;

Rng make_rng(std::uint64_t seed, std::uint64_t stream);
double uniform01(Rng& rng);
double standard_normal(Rng& rng);

}  // namespace sbandit
