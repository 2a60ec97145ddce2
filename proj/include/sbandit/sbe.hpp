#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sbandit/design.hpp"
#include "sbandit/environment.hpp"

namespace sbandit {

enum class Schedule { Fixed, Adaptive };

/// Which arm count enters the logarithm of the phase length.
enum class ArmCountInLog { Active, Original };

struct SbeConfig {
  double delta = 0.1;
  long horizon = 100000;
  double c2 = 1.0;
  double c3 = 1.0;
  Schedule schedule = Schedule::Fixed;
  double fw_tol = 1e-3;
  ArmCountInLog arm_count = ArmCountInLog::Active;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Number of samples in phase ℓ (ε = 2^−ℓ):
///   fixed:    4·c2·⌈ d/ε²·ln(dKℓ(ℓ+1)/(δε)) + d^{3/2}/ε·ln(dKℓ(ℓ+1)/δ) ⌉
///   adaptive: min(fixed, 4·c3·⌈ d²/ε²·ln(dℓ(ℓ+1)/(δε)) ⌉)
/// Throws ScheduleOverflow when the count does not fit in 62 bits.
long phase_length(int phase, Eigen::Index d_eff, Eigen::Index k_active, const SbeConfig& cfg);

/// Pure-exploration budget C₂·( d/ε²·ln(dK/(εδ)) + d^{3/2}/ε·ln(dK/δ) ),
/// rounded up.
long pac_budget(Eigen::Index d, Eigen::Index k, double epsilon, double delta, double c2);

/// Arms of `active` whose estimated reward is within `epsilon` of the best
/// estimate (ties at exactly epsilon survive). Never empty for nonempty
/// input; order is preserved.
std::vector<Arm> eliminate(const FeatureSet& features, std::span<const Arm> active,
                           const Vector& theta_hat, double epsilon);

struct StepLog {
  long t = 0;  ///< 1-based round
  int phase = 0;
  Arm arm = 0;
  double reward = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  Eigen::Index active_size = 0;
};

struct PhaseLog {
  int phase = 0;
  std::vector<Arm> active;
  Arm anchor = 0;
  double epsilon = 0.0;
  long scheduled_length = 0;  ///< n_ℓ
  long samples = 0;           ///< < n_ℓ only for a phase cut by the horizon
  long start_t = 0;           ///< first round of the phase
  long end_t = 0;             ///< last round of the phase
  DesignCertificate certificate;
  double beta = 0.0;
  Vector theta_hat;
  double max_estimation_error = 0.0;  ///< max over active of |(x_i − x_anchor)ᵀ(θ̂ − θ*)|
  bool truncated = false;
  std::vector<Arm> survivors;  ///< empty when truncated
};

/// θ̂ available from round `t` on, with the arms and anchor it is judged
/// against.
struct EstimateSnapshot {
  long t = 0;
  Arm anchor = 0;
  std::vector<Arm> arms;
  Vector theta_hat;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<StepLog> steps;
  std::vector<PhaseLog> phases;
  std::vector<EstimateSnapshot> snapshots;
  std::optional<Arm> declared_best;
  std::optional<long> declaration_time;
  AssumptionAudit audit;

  double total_regret() const { return steps.empty() ? 0.0 : steps.back().cum_regret; }
};

/// Phase elimination with the orthogonalized design: per phase, a DEO
/// design on the active arms anchored at the smallest active index, n_ℓ
/// samples, a ridge fit with β = ln(n_ℓ ℓ(ℓ+1)/δ) on that phase's samples,
/// elimination at ε_ℓ = 2^−ℓ. A lone survivor is declared best and played
/// until the horizon. Exactly `cfg.horizon` rounds are logged.
///
/// `seed` drives arm sampling; reward noise comes from the environment's
/// own seed.
RunRecord run_sbe(const Environment& env, const SbeConfig& cfg, std::uint64_t seed);

struct PureExplorationOptions {
  double fw_tol = 1e-3;
  /// Record a θ̂_t snapshot (β_t = ln(t/δ)) every this many rounds; 0
  /// records only the final estimate.
  long snapshot_stride = 0;
};

struct PureExplorationResult {
  Vector theta_hat;
  Arm greedy_arm = 0;
  DeoResult design;
  RunRecord record;
};

/// One DEO design over all arms anchored at arm 0, `budget` i.i.d. draws,
/// a ridge fit with β = ln(budget/δ), and the greedy arm argmax_i x_iᵀθ̂.
PureExplorationResult run_pure_exploration(const Environment& env, long budget, double delta,
                                           std::uint64_t seed,
                                           const PureExplorationOptions& opts = {});

/// Declaration time of the best arm, if any.
std::optional<long> bai_stopping_time(const RunRecord& record);

}  // namespace sbandit
