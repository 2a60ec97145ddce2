#include "sbandit/sbe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sbandit/errors.hpp"
#include "sbandit/estimator.hpp"
#include "sbandit/random.hpp"

namespace sbandit {
namespace {

constexpr std::uint64_t kSamplerStream = 0x73616d706c65ULL;  // "sample"
constexpr double kMaxSchedule = 4.6e18;                       // just under 2^62

long to_count(double value) {
  if (!std::isfinite(value) || value > kMaxSchedule) {
    throw ScheduleOverflow("phase length exceeds the integer range");
  }
  return std::max(1L, static_cast<long>(value));
}

// Inverse-CDF draw from a policy. Falls back to the last arm with positive
// mass when rounding leaves u above the final cumulative sum.
class PolicySampler {
 public:
  explicit PolicySampler(const DesignPolicy& policy) {
    const Vector& p = policy.probabilities();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) <= 0.0) continue;
      acc += p(i);
      arms_.push_back(i);
      cdf_.push_back(acc);
    }
  }

  Arm draw(Rng& rng) const {
    const double u = uniform01(rng) * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                                           arms_.size() - 1);
    return arms_[idx];
  }

 private:
  std::vector<Arm> arms_;
  std::vector<double> cdf_;
};

double max_error_against(const Environment& env, std::span<const Arm> arms, Arm anchor,
                         const Vector& theta_hat) {
  const Vector err = theta_hat - env.theta_star();
  const auto& x = env.features().matrix();
  double worst = 0.0;
  for (Arm i : arms) worst = std::max(worst, std::abs((x.col(i) - x.col(anchor)).dot(err)));
  return worst;
}

Arm argmax_estimate(const FeatureSet& features, const Vector& theta_hat) {
  const Vector values = features.matrix().transpose() * theta_hat;
  Arm best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

void note_shift(AssumptionAudit& audit, double nu) {
  audit.max_abs_shift = std::max(audit.max_abs_shift, std::abs(nu));
  if (std::abs(nu) > 1.0) ++audit.shift_violations;
}

}  // namespace

void SbeConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta", "must lie in (0,1)");
  if (horizon < 1) throw ConfigError("horizon", "must be at least 1");
  if (!(c2 > 0.0)) throw ConfigError("c2", "must be positive");
  if (!(c3 > 0.0)) throw ConfigError("c3", "must be positive");
  if (!(fw_tol > 0.0)) throw ConfigError("fw_tol", "must be positive");
}

long phase_length(int phase, Eigen::Index d_eff, Eigen::Index k_active, const SbeConfig& cfg) {
  if (phase < 1) throw InvalidSample("phase index must be >= 1");
  if (k_active < 2) throw InvalidSample("phase length needs at least two active arms");
  if (d_eff < 1) throw InvalidSample("phase length needs d_eff >= 1");

  const double l = static_cast<double>(phase);
  const double d = static_cast<double>(d_eff);
  const double k = static_cast<double>(k_active);
  const double eps = std::ldexp(1.0, -phase);
  const double ll = l * (l + 1.0);

  const double fixed_inner = d / (eps * eps) * std::log(d * k * ll / (cfg.delta * eps)) +
                             std::pow(d, 1.5) / eps * std::log(d * k * ll / cfg.delta);
  const long fixed = to_count(std::ceil(4.0 * cfg.c2 * std::ceil(fixed_inner)));
  if (cfg.schedule == Schedule::Fixed) return fixed;

  const double adaptive_inner = d * d / (eps * eps) * std::log(d * ll / (cfg.delta * eps));
  const long adaptive = to_count(std::ceil(4.0 * cfg.c3 * std::ceil(adaptive_inner)));
  return std::min(fixed, adaptive);
}

long pac_budget(Eigen::Index d, Eigen::Index k, double epsilon, double delta, double c2) {
  const double dd = static_cast<double>(d);
  const double kk = static_cast<double>(k);
  const double value = c2 * (dd / (epsilon * epsilon) * std::log(dd * kk / (epsilon * delta)) +
                             std::pow(dd, 1.5) / epsilon * std::log(dd * kk / delta));
  return to_count(std::ceil(value));
}

std::vector<Arm> eliminate(const FeatureSet& features, std::span<const Arm> active,
                           const Vector& theta_hat, double epsilon) {
  if (active.empty()) throw InvalidArm("eliminate: empty active set");
  std::vector<double> values;
  values.reserve(active.size());
  for (Arm i : active) values.push_back(features.arm(i).dot(theta_hat));
  const double top = *std::max_element(values.begin(), values.end());
  std::vector<Arm> keep;
  for (std::size_t j = 0; j < active.size(); ++j) {
    if (!(top - values[j] > epsilon)) keep.push_back(active[j]);
  }
  return keep;
}

RunRecord run_sbe(const Environment& env, const SbeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const FeatureSet& features = env.features();
  const Eigen::Index num_arms = features.num_arms();
  const long horizon = cfg.horizon;

  RunRecord rec;
  rec.seed = seed;
  rec.audit = env.static_audit();
  rec.steps.reserve(static_cast<std::size_t>(horizon));

  std::vector<Arm> active(static_cast<std::size_t>(num_arms));
  std::iota(active.begin(), active.end(), Arm{0});
  rec.snapshots.push_back({0, active.front(), active, Vector::Zero(env.dim())});

  Rng rng = make_rng(seed, kSamplerStream);
  EstimatorState est(env.dim());
  long t = 0;
  double cum = 0.0;

  auto play = [&](Arm arm, int phase) {
    ++t;
    const double nu = env.shift_at(t);
    note_shift(rec.audit, nu);
    const double r = env.reward(arm, t);
    const double inst = env.regret_of(arm);
    cum += inst;
    rec.steps.push_back({t, phase, arm, r, inst, cum, static_cast<Eigen::Index>(active.size())});
    return r;
  };

  for (int phase = 1;; ++phase) {
    if (active.size() == 1) {
      rec.declared_best = active.front();
      rec.declaration_time = t;
      while (t < horizon) play(active.front(), phase);
      break;
    }
    if (t >= horizon) break;

    const Arm anchor = active.front();
    const double eps = std::ldexp(1.0, -phase);
    const DeoResult design = deo(features.subset(active), 0, GOptimalOptions{cfg.fw_tol, 0});
    Vector p = Vector::Zero(num_arms);
    for (std::size_t j = 0; j < active.size(); ++j) {
      p(active[j]) = design.policy[static_cast<Eigen::Index>(j)];
    }
    const DesignPolicy policy(std::move(p));
    const Vector mean = features.matrix() * policy.probabilities();
    const PolicySampler sampler(policy);

    const Eigen::Index k_log = cfg.arm_count == ArmCountInLog::Active
                                   ? static_cast<Eigen::Index>(active.size())
                                   : num_arms;
    long n = 0;
    try {
      n = phase_length(phase, std::max<Eigen::Index>(design.certificate.effective_dim, 1), k_log,
                       cfg);
    } catch (const ScheduleOverflow&) {
      n = std::numeric_limits<long>::max();
    }

    PhaseLog log;
    log.phase = phase;
    log.active = active;
    log.anchor = anchor;
    log.epsilon = eps;
    log.scheduled_length = n;
    log.start_t = t + 1;
    log.certificate = design.certificate;

    est.reset();
    long taken = 0;
    while (taken < n && t < horizon) {
      const Arm arm = sampler.draw(rng);
      const double r = play(arm, phase);
      est.update(features.arm(arm) - mean, r);
      ++taken;
    }
    log.samples = taken;
    log.end_t = t;
    log.truncated = taken < n;
    const double ll = static_cast<double>(phase) * (phase + 1.0);
    log.beta = std::log(static_cast<double>(taken) * ll / cfg.delta);
    log.theta_hat = solve(est, log.beta);
    log.max_estimation_error = max_error_against(env, active, anchor, log.theta_hat);
    rec.snapshots.push_back({t, anchor, active, log.theta_hat});

    if (log.truncated) {
      rec.phases.push_back(std::move(log));
      break;
    }
    log.survivors = eliminate(features, active, log.theta_hat, eps);
    active = log.survivors;
    rec.phases.push_back(std::move(log));
  }
  return rec;
}

PureExplorationResult run_pure_exploration(const Environment& env, long budget, double delta,
                                           std::uint64_t seed,
                                           const PureExplorationOptions& opts) {
  if (budget < 1) throw InvalidSample("budget must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidRegularizer("delta must lie in (0,1)");

  const FeatureSet& features = env.features();
  const Eigen::Index num_arms = features.num_arms();
  DeoResult design = deo(features, 0, GOptimalOptions{opts.fw_tol, 0});
  const Vector mean = features.matrix() * design.policy.probabilities();
  const PolicySampler sampler(design.policy);

  std::vector<Arm> all(static_cast<std::size_t>(num_arms));
  std::iota(all.begin(), all.end(), Arm{0});

  RunRecord rec;
  rec.seed = seed;
  rec.audit = env.static_audit();
  rec.steps.reserve(static_cast<std::size_t>(budget));
  rec.snapshots.push_back({0, 0, all, Vector::Zero(env.dim())});

  PhaseLog log;
  log.phase = 1;
  log.active = all;
  log.anchor = 0;
  log.scheduled_length = budget;
  log.start_t = 1;
  log.certificate = design.certificate;

  Rng rng = make_rng(seed, kSamplerStream);
  EstimatorState est(env.dim());
  double cum = 0.0;
  for (long t = 1; t <= budget; ++t) {
    const Arm arm = sampler.draw(rng);
    note_shift(rec.audit, env.shift_at(t));
    const double r = env.reward(arm, t);
    const double inst = env.regret_of(arm);
    cum += inst;
    rec.steps.push_back({t, 1, arm, r, inst, cum, num_arms});
    est.update(features.arm(arm) - mean, r);
    if (opts.snapshot_stride > 0 && t % opts.snapshot_stride == 0 && t != budget) {
      rec.snapshots.push_back({t, 0, all, solve(est, regularizer(t, delta))});
    }
  }

  log.samples = budget;
  log.end_t = budget;
  log.beta = regularizer(budget, delta);
  log.theta_hat = solve(est, log.beta);
  log.max_estimation_error = max_error_against(env, all, 0, log.theta_hat);
  rec.snapshots.push_back({budget, 0, all, log.theta_hat});

  PureExplorationResult out{log.theta_hat, argmax_estimate(features, log.theta_hat),
                            std::move(design), {}};
  rec.phases.push_back(std::move(log));
  out.record = std::move(rec);
  return out;
}

std::optional<long> bai_stopping_time(const RunRecord& record) { return record.declaration_time; }

}  // namespace sbandit
