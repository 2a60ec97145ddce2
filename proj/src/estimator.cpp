#include "sbandit/estimator.hpp"

#include <cmath>
#include <string>

#include "sbandit/errors.hpp"

namespace sbandit {

EstimatorState::EstimatorState(Eigen::Index dim)
    : gram_(PsdMatrix::zero(dim)), moment_(Vector::Zero(dim)) {
  if (dim <= 0) throw DimError("estimator dimension must be positive");
}

void EstimatorState::update(const Vector& centered, double reward) {
  if (centered.size() != dim()) throw DimError("update: feature dimension mismatch");
  if (!std::isfinite(reward)) throw InvalidSample("non-finite reward");
  if (!centered.allFinite()) throw InvalidSample("non-finite centered feature");
  gram_.add_outer(centered);
  moment_.noalias() += reward * centered;
  ++count_;
}

void EstimatorState::reset() {
  gram_ = PsdMatrix::zero(dim());
  moment_.setZero();
  count_ = 0;
}

void RidgeConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidRegularizer("delta must lie in (0,1)");
  if (beta_override && !(*beta_override > 0.0)) {
    throw InvalidRegularizer("beta_override must be positive");
  }
}

double RidgeConfig::beta(long t) const {
  return beta_override ? *beta_override : regularizer(t, delta);
}

Vector center(const FeatureSet& features, const Vector& policy_mean, Arm arm) {
  if (arm < 0 || arm >= features.num_arms()) throw InvalidArm("center: arm out of range");
  if (policy_mean.size() != features.dim()) throw DimError("center: mean dimension mismatch");
  return features.arm(arm) - policy_mean;
}

Vector center(const FeatureSet& features, const DesignPolicy& policy, Arm arm) {
  if (policy.num_arms() != features.num_arms()) throw DimError("center: policy size mismatch");
  return center(features, Vector(features.matrix() * policy.probabilities()), arm);
}

double regularizer(long t, double delta) {
  if (t < 1) throw InvalidRegularizer("regularizer needs t >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidRegularizer("delta must lie in (0,1)");
  return std::log(static_cast<double>(t) / delta);
}

Vector solve(const EstimatorState& state, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidRegularizer("ridge regularizer must be positive, got " + std::to_string(beta));
  }
  Matrix a = state.gram().matrix();
  a.diagonal().array() += beta;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw SingularMatrix("ridge system is not positive definite");
  return llt.solve(state.moment());
}

double error_bound_diagnostic(const DesignCertificate& cert, long t, double delta, double c1) {
  if (t < 1) throw InvalidRegularizer("diagnostic needs t >= 1");
  const double l = cert.anchor_norm_sq();
  const double m = cert.centered_norm_sq();
  const double d = static_cast<double>(std::max<Eigen::Index>(cert.effective_dim, 1));
  const double tt = static_cast<double>(t);
  return c1 * (std::sqrt(l * std::log(tt / delta)) / std::sqrt(tt) +
               std::sqrt(l) * m * std::log(d / delta) / tt);
}

}  // namespace sbandit
