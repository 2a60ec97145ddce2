#pragma once

#include <optional>

#include "sbandit/design.hpp"
#include "sbandit/linalg.hpp"

namespace sbandit {

/// Centered statistics of orthogonalized regression:
/// gram B = Σ x̃ x̃ᵀ, moment b = Σ x̃ r, and the sample count.
class EstimatorState {
 public:
  explicit EstimatorState(Eigen::Index dim);

  Eigen::Index dim() const { return moment_.size(); }
  const PsdMatrix& gram() const { return gram_; }
  const Vector& moment() const { return moment_; }
  long count() const { return count_; }

  /// Adds one centered sample. Throws InvalidSample on a non-finite
  /// reward or feature, DimError on a size mismatch.
  void update(const Vector& centered, double reward);
  void reset();

 private:
  PsdMatrix gram_;
  Vector moment_;
  long count_ = 0;
};

struct RidgeConfig {
  double delta = 0.1;
  std::optional<double> beta_override;

  /// Throws InvalidRegularizer unless delta ∈ (0,1) and any override is > 0.
  void validate() const;
  /// beta_override if set, else regularizer(t, delta).
  double beta(long t) const;
};

/// x_arm − Σ_i p_i x_i, the arm's feature centered at the sampling policy's
/// mean.
Vector center(const FeatureSet& features, const DesignPolicy& policy, Arm arm);

/// Same, with the policy mean already computed.
Vector center(const FeatureSet& features, const Vector& policy_mean, Arm arm);

/// β_t = ln(t/δ).
double regularizer(long t, double delta);

/// θ̂ = (B + βI)⁻¹ b by Cholesky. Throws InvalidRegularizer for β ≤ 0.
Vector solve(const EstimatorState& state, double beta);

/// Envelope of the fixed-policy estimation error at a direction with
/// squared norm L, given max centered squared norm M:
///   C1·( sqrt(L·ln(t/δ)/t) + sqrt(L)·M·ln(d/δ)/t ),
/// with L, M, d taken from the certificate.
double error_bound_diagnostic(const DesignCertificate& cert, long t, double delta,
                              double c1 = 10.0);

}  // namespace sbandit
