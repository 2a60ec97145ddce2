#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbandit/design.hpp"

namespace sbandit {

enum class ShiftKind {
  None,
  Sine,               ///< 1 + sin(2t)
  LogAlternating,     ///< max(ln(t+1)/5, 2)·(−1)^(t mod 3), as printed
  LogAlternatingMin,  ///< min(ln(t+1)/5, 2)·(−1)^(t mod 3)
  Constant,
  Table,              ///< table[(t−1) mod size]
};

struct ShiftSpec {
  ShiftKind kind = ShiftKind::None;
  double constant = 0.0;
  std::vector<double> table;
  /// Clamp emitted values to [−1, 1].
  bool clip_to_unit = false;

  static ShiftSpec none() { return {}; }
  static ShiftSpec sine(bool clip = false) { return {ShiftKind::Sine, 0.0, {}, clip}; }
  static ShiftSpec log_alternating(bool clip = false) {
    return {ShiftKind::LogAlternating, 0.0, {}, clip};
  }
  static ShiftSpec log_alternating_min(bool clip = false) {
    return {ShiftKind::LogAlternatingMin, 0.0, {}, clip};
  }
  static ShiftSpec constant_value(double c, bool clip = false) {
    return {ShiftKind::Constant, c, {}, clip};
  }
  static ShiftSpec from_table(std::vector<double> values, bool clip = false) {
    return {ShiftKind::Table, 0.0, std::move(values), clip};
  }
};

/// ν_t for round t ≥ 1. Depends on t only, never on the arm.
double shift_value(const ShiftSpec& spec, long t);

enum class NoiseKind { None, Gaussian, BoundedUniform };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  /// σ for Gaussian, a for uniform on [−a, a].
  double scale = 0.0;

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double sigma) { return {NoiseKind::Gaussian, sigma}; }
  static NoiseSpec bounded_uniform(double a) { return {NoiseKind::BoundedUniform, a}; }

  double variance_proxy() const { return kind == NoiseKind::None ? 0.0 : scale; }
};

std::string to_string(ShiftKind kind);
std::string to_string(NoiseKind kind);

class NoUniqueBestArm : public Error {
 public:
  using Error::Error;
};

enum class TiePolicy { Warn, Error };

/// Static part of the boundedness audit (‖θ*‖ ≤ 1, ‖x_i‖ ≤ 1); runs add
/// the shift part.
struct AssumptionAudit {
  double theta_norm = 0.0;
  double max_feature_norm = 0.0;
  long shift_violations = 0;  ///< rounds with |ν_t| > 1
  double max_abs_shift = 0.0;

  bool ok() const {
    return theta_norm <= 1.0 + 1e-12 && max_feature_norm <= 1.0 + 1e-12 &&
           shift_violations == 0;
  }
};

/// Semiparametric reward process r_t = x_{a_t}ᵀθ* + ν_t + η_t.
///
/// Immutable. Noise is counter-based: η_t is a pure function of (seed, t),
/// so the same round draws the same noise whichever arm is played.
class Environment {
 public:
  Environment(FeatureSet features, Vector theta_star, ShiftSpec shift, NoiseSpec noise,
              std::uint64_t seed, TiePolicy ties = TiePolicy::Warn);

  const FeatureSet& features() const { return features_; }
  const Vector& theta_star() const { return theta_; }
  const ShiftSpec& shift() const { return shift_; }
  const NoiseSpec& noise() const { return noise_; }
  std::uint64_t seed() const { return seed_; }

  Eigen::Index num_arms() const { return features_.num_arms(); }
  Eigen::Index dim() const { return features_.dim(); }
  Arm best_arm() const { return best_; }
  double gap() const { return gap_; }
  const Vector& mean_rewards() const { return means_; }
  double mean_reward(Arm arm) const;
  /// x_{a*}ᵀθ* − x_armᵀθ*.
  double regret_of(Arm arm) const;

  double shift_at(long t) const { return shift_value(shift_, t); }
  double noise_at(long t) const;
  /// Throws InvalidArm for arms out of range.
  double reward(Arm arm, long t) const;

  AssumptionAudit static_audit() const;
  Environment reseeded(std::uint64_t seed) const;

 private:
  FeatureSet features_;
  Vector theta_;
  ShiftSpec shift_;
  NoiseSpec noise_;
  std::uint64_t seed_;
  Vector means_;
  Arm best_ = 0;
  double gap_ = 0.0;
};

/// r = x_armᵀθ* + ν_t + η_t for round t.
inline double step(const Environment& env, Arm arm, long t) { return env.reward(arm, t); }

/// Random unit-ball features and unit θ* whose realized gap between the
/// best and runner-up arms equals `gap` (to 1e-9). Throws GenerationError
/// for gap ∉ (0, 2) or if no valid draw is found in 10⁴ attempts.
Environment make_gap_instance(Eigen::Index d, Eigen::Index k, double gap, std::uint64_t seed,
                              ShiftSpec shift = {}, NoiseSpec noise = {});

/// Random unit-ball features and unit θ*, no gap control.
Environment make_random_instance(Eigen::Index d, Eigen::Index k, std::uint64_t seed,
                                 ShiftSpec shift = {}, NoiseSpec noise = {});

struct MabEmbedding {
  Environment env;
  /// θ* = scale·μ; 1 unless ‖μ‖ > 1.
  double scale = 1.0;

  double gap_in_mean_units() const { return env.gap() / scale; }
};

/// K-armed bandit with means μ as standard-basis features in R^K.
MabEmbedding make_mab_embedding(const Vector& mu, ShiftSpec shift = {}, NoiseSpec noise = {},
                                std::uint64_t seed = 0);

}  // namespace sbandit
