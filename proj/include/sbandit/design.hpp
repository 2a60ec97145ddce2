#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sbandit/errors.hpp"
#include "sbandit/linalg.hpp"

namespace sbandit {

/// Arm index, zero-based.
using Arm = Eigen::Index;

enum class NormAudit { Warn, Skip };

/// The K arm features in d dimensions, stored column-wise (column i is x_i).
class FeatureSet {
 public:
  /// Warns (does not throw) when some ‖x_i‖₂ exceeds 1 unless `audit` is
  /// NormAudit::Skip. Throws InvalidMatrix on non-finite entries.
  explicit FeatureSet(Matrix columns, NormAudit audit = NormAudit::Warn);

  static FeatureSet from_rows(const std::vector<std::vector<double>>& rows,
                              NormAudit audit = NormAudit::Warn);

  Eigen::Index dim() const { return x_.rows(); }
  Eigen::Index num_arms() const { return x_.cols(); }
  const Matrix& matrix() const { return x_; }
  auto arm(Arm i) const { return x_.col(i); }

  double max_norm() const;
  /// Rank of span{x_1, …, x_K}.
  Eigen::Index rank() const;

  FeatureSet subset(std::span<const Arm> arms) const;

 private:
  Matrix x_;
};

/// A probability vector over arms.
class DesignPolicy {
 public:
  /// Entries must be finite and nonnegative and sum to 1 within 1e-9; the
  /// stored vector is renormalized so its sum is 1 to rounding.
  explicit DesignPolicy(Vector probabilities);

  static DesignPolicy point_mass(Eigen::Index num_arms, Arm arm);
  static DesignPolicy uniform(Eigen::Index num_arms);

  Eigen::Index num_arms() const { return p_.size(); }
  const Vector& probabilities() const { return p_; }
  double operator[](Arm i) const { return p_(i); }
  std::vector<Arm> support() const;
  std::size_t support_size() const;

 private:
  Vector p_;
};

struct PolicyMoments {
  Vector mean;           ///< x̄_p = Σ p_i x_i
  PsdMatrix covariance;  ///< Σ_p = Σ p_i (x_i − x̄_p)(x_i − x̄_p)ᵀ
};

/// Bounds achieved by a design for orthogonalized regression, measured in
/// the span of the anchored differences.
struct DesignCertificate {
  double max_anchor_norm = 0.0;    ///< max_i ‖x_i − x_anchor‖_{Σ⁻¹}
  double max_centered_norm = 0.0;  ///< max_i ‖x_i − x̄‖_{Σ⁻¹}
  std::size_t support_size = 0;
  Eigen::Index effective_dim = 0;  ///< rank of span{x_i − x_anchor}

  double anchor_norm_sq() const { return max_anchor_norm * max_anchor_norm; }
  double centered_norm_sq() const { return max_centered_norm * max_centered_norm; }
};

struct GOptimalResult {
  DesignPolicy policy;
  double max_norm_sq = 0.0;        ///< max_i ‖x_i‖²_{M(p)⁻¹}
  Eigen::Index effective_dim = 0;  ///< rank of the feature span
  int iterations = 0;
};

/// g_optimal ran out of iterations. Carries the best iterate found.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, GOptimalResult best)
      : Error(message), best_(std::move(best)) {}
  const GOptimalResult& best() const noexcept { return best_; }

 private:
  GOptimalResult best_;
};

struct GOptimalOptions {
  double fw_tol = 1e-3;
  /// Zero or negative selects the default max(10·d², 2000).
  int max_iters = 0;
};

/// G-optimal design min_p max_i ‖x_i‖_{M(p)⁻¹}, M(p) = Σ p_i x_i x_iᵀ.
///
/// Solved as the equivalent D-optimal problem by Frank–Wolfe with away steps
/// and exact line search, inside an orthonormal basis of the feature span.
/// On return max_norm_sq ≤ d_eff·(1 + fw_tol) and the support has at most
/// d_eff(d_eff+1)/2 arms.
GOptimalResult g_optimal(const FeatureSet& features, const GOptimalOptions& opts = {});

struct DeoResult {
  DesignPolicy policy;
  DesignCertificate certificate;
  Arm anchor = 0;
};

/// Design for orthogonalized regression: a G-optimal design on the anchored
/// differences x_i − x_anchor, halved, plus mass 1/2 on the anchor.
DeoResult deo(const FeatureSet& features, Arm anchor = 0, const GOptimalOptions& opts = {});

PolicyMoments policy_moments(const FeatureSet& features, const DesignPolicy& policy);

/// Σ_{i<j} p_i p_j (x_i − x_j)(x_i − x_j)ᵀ; identical to the policy
/// covariance.
PsdMatrix covariance_pairwise(const FeatureSet& features, const DesignPolicy& policy);

/// Certificate of an arbitrary policy relative to `anchor`.
DesignCertificate design_certificate(const FeatureSet& features, const DesignPolicy& policy,
                                     Arm anchor);

}  // namespace sbandit
