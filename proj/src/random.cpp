#include "sbandit/random.hpp"

#include <cmath>
#include <numbers>

namespace sbandit {
namespace {

double box_muller(double u1, double u2) {
  // u1 in (0, 1] keeps the logarithm finite.
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t base = counter_hash(seed, stream, counter);
  const double u1 = 1.0 - unit_interval(mix64(base));
  const double u2 = unit_interval(mix64(base ^ 0xd1b54a32d192ed03ULL));
  return box_muller(u1, u2);
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(counter_hash(seed, stream, 0));
}

double uniform01(Rng& rng) { return unit_interval(rng()); }

double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return box_muller(u1, u2);
}

}  // namespace sbandit
