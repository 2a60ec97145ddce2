#include "sbandit/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sbandit/log.hpp"
#include "sbandit/random.hpp"

namespace sbandit {
namespace {

// Stream identifiers keep the noise and generator streams disjoint for a
// shared seed.
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;      // "noise"
constexpr std::uint64_t kGeneratorStream = 0x67656e6572ULL;  // "gener"

constexpr int kMaxGenerationAttempts = 10000;
constexpr double kTieTol = 1e-12;

Vector uniform_in_ball(Rng& rng, Eigen::Index d) {
  Vector v(d);
  do {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = standard_normal(rng);
  } while (v.norm() == 0.0);
  const double radius = std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
  return radius * v / v.norm();
}

Vector unit_vector(Rng& rng, Eigen::Index d) {
  Vector v(d);
  do {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = standard_normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

double alternating_sign(long t) { return (t % 3) == 1 ? -1.0 : 1.0; }

}  // namespace

double shift_value(const ShiftSpec& spec, long t) {
  const double tt = static_cast<double>(t);
  double v = 0.0;
  switch (spec.kind) {
    case ShiftKind::None:
      v = 0.0;
      break;
    case ShiftKind::Sine:
      v = 1.0 + std::sin(2.0 * tt);
      break;
    case ShiftKind::LogAlternating:
      v = std::max(std::log(tt + 1.0) / 5.0, 2.0) * alternating_sign(t);
      break;
    case ShiftKind::LogAlternatingMin:
      v = std::min(std::log(tt + 1.0) / 5.0, 2.0) * alternating_sign(t);
      break;
    case ShiftKind::Constant:
      v = spec.constant;
      break;
    case ShiftKind::Table:
      if (spec.table.empty()) throw InvalidSample("shift table is empty");
      v = spec.table[static_cast<std::size_t>((t - 1) % static_cast<long>(spec.table.size()))];
      break;
  }
  if (spec.clip_to_unit) v = std::clamp(v, -1.0, 1.0);
  return v;
}

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::None: return "none";
    case ShiftKind::Sine: return "sine";
    case ShiftKind::LogAlternating: return "log_alternating";
    case ShiftKind::LogAlternatingMin: return "log_alternating_min";
    case ShiftKind::Constant: return "constant";
    case ShiftKind::Table: return "table";
  }
  return "unknown";
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::BoundedUniform: return "bounded_uniform";
  }
  return "unknown";
}

Environment::Environment(FeatureSet features, Vector theta_star, ShiftSpec shift,
                         NoiseSpec noise, std::uint64_t seed, TiePolicy ties)
    : features_(std::move(features)),
      theta_(std::move(theta_star)),
      shift_(std::move(shift)),
      noise_(noise),
      seed_(seed) {
  if (theta_.size() != features_.dim()) throw DimError("theta_star dimension mismatch");
  if (!theta_.allFinite()) throw InvalidSample("theta_star has non-finite entries");
  if (features_.num_arms() < 2) throw DegenerateFeatures("an environment needs at least two arms");
  if (noise_.kind != NoiseKind::None && !(noise_.scale >= 0.0)) {
    throw InvalidSample("noise scale must be nonnegative");
  }
  if (shift_.kind == ShiftKind::Table && shift_.table.empty()) {
    throw InvalidSample("shift table is empty");
  }
  if (theta_.norm() > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "theta_star has norm " << theta_.norm() << " > 1";
    warn(msg.str());
  }

  means_ = features_.matrix().transpose() * theta_;
  means_.maxCoeff(&best_);
  double runner_up = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < means_.size(); ++i) {
    if (i != best_) runner_up = std::max(runner_up, means_(i));
  }
  gap_ = means_(best_) - runner_up;
  if (gap_ <= kTieTol) {
    if (ties == TiePolicy::Error) {
      throw NoUniqueBestArm("best arm is not unique (gap " + std::to_string(gap_) + ")");
    }
    warn("best arm is not unique; gap-dependent quantities are meaningless");
  }
}

double Environment::mean_reward(Arm arm) const {
  if (arm < 0 || arm >= num_arms()) throw InvalidArm("arm out of range");
  return means_(arm);
}

double Environment::regret_of(Arm arm) const { return means_(best_) - mean_reward(arm); }

double Environment::noise_at(long t) const {
  switch (noise_.kind) {
    case NoiseKind::None:
      return 0.0;
    case NoiseKind::Gaussian:
      return noise_.scale * counter_normal(seed_, kNoiseStream, static_cast<std::uint64_t>(t));
    case NoiseKind::BoundedUniform: {
      const double u = unit_interval(counter_hash(seed_, kNoiseStream, static_cast<std::uint64_t>(t)));
      return noise_.scale * (2.0 * u - 1.0);
    }
  }
  return 0.0;
}

double Environment::reward(Arm arm, long t) const {
  if (arm < 0 || arm >= num_arms()) {
    throw InvalidArm("arm " + std::to_string(arm) + " out of range [0, " +
                     std::to_string(num_arms()) + ")");
  }
  // ν_t and η_t are fixed before the arm enters.
  const double nu = shift_at(t);
  const double eta = noise_at(t);
  return means_(arm) + nu + eta;
}

AssumptionAudit Environment::static_audit() const {
  AssumptionAudit a;
  a.theta_norm = theta_.norm();
  a.max_feature_norm = features_.max_norm();
  return a;
}

Environment Environment::reseeded(std::uint64_t seed) const {
  Environment copy = *this;
  copy.seed_ = seed;
  return copy;
}

Environment make_gap_instance(Eigen::Index d, Eigen::Index k, double gap, std::uint64_t seed,
                              ShiftSpec shift, NoiseSpec noise) {
  if (!(gap > 0.0 && gap < 2.0)) throw GenerationError("gap must lie in (0, 2)");
  if (d < 1 || k < 2) throw GenerationError("need d >= 1 and K >= 2");

  Rng rng = make_rng(seed, kGeneratorStream);
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    const Vector theta = unit_vector(rng, d);
    Matrix x(d, k);
    for (Eigen::Index i = 0; i < k; ++i) x.col(i) = uniform_in_ball(rng, d);

    Vector values = x.transpose() * theta;
    Eigen::Index best = 0;
    values.maxCoeff(&best);
    double runner_up = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (i != best) runner_up = std::max(runner_up, values(i));
    }
    const double target = runner_up + gap;
    if (target > 1.0) continue;

    // Put the best arm exactly `gap` above the runner-up along θ*, then
    // shrink its orthogonal part if that left the unit ball.
    const Vector ortho = x.col(best) - values(best) * theta;
    const double room = std::sqrt(std::max(0.0, 1.0 - target * target));
    const double ortho_norm = ortho.norm();
    const double ortho_scale = ortho_norm > room ? room / ortho_norm : 1.0;
    x.col(best) = target * theta + ortho_scale * ortho;

    values = x.transpose() * theta;
    double second = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (i != best) second = std::max(second, values(i));
    }
    if (std::abs(values(best) - second - gap) > 1e-9) continue;
    if (x.colwise().norm().maxCoeff() > 1.0 + 1e-12) continue;

    return Environment(FeatureSet(std::move(x)), theta, std::move(shift), noise, seed,
                       TiePolicy::Error);
  }
  throw GenerationError("no feature set with gap " + std::to_string(gap) + " for d=" +
                        std::to_string(d) + ", K=" + std::to_string(k) + " after " +
                        std::to_string(kMaxGenerationAttempts) + " attempts");
}

Environment make_random_instance(Eigen::Index d, Eigen::Index k, std::uint64_t seed,
                                 ShiftSpec shift, NoiseSpec noise) {
  if (d < 1 || k < 2) throw GenerationError("need d >= 1 and K >= 2");
  Rng rng = make_rng(seed, kGeneratorStream);
  const Vector theta = unit_vector(rng, d);
  Matrix x(d, k);
  for (Eigen::Index i = 0; i < k; ++i) x.col(i) = uniform_in_ball(rng, d);
  return Environment(FeatureSet(std::move(x)), theta, std::move(shift), noise, seed);
}

MabEmbedding make_mab_embedding(const Vector& mu, ShiftSpec shift, NoiseSpec noise,
                                std::uint64_t seed) {
  if (mu.size() < 2) throw DegenerateFeatures("MAB embedding needs K >= 2");
  const double norm = mu.norm();
  const double scale = norm > 1.0 ? 1.0 / norm : 1.0;
  const Eigen::Index k = mu.size();
  return MabEmbedding{Environment(FeatureSet(Matrix::Identity(k, k)), scale * mu,
                                  std::move(shift), noise, seed, TiePolicy::Error),
                      scale};
}

}  // namespace sbandit
