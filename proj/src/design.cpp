#include "sbandit/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "sbandit/log.hpp"

namespace sbandit {
namespace {

constexpr double kSumTol = 1e-9;
constexpr double kPruneWeight = 1e-9;
// Fresh restarts of the pruning/refinement loop before giving up.
constexpr int kMaxRefinements = 8;
constexpr Eigen::Index kMinDefaultIters = 2000;

std::size_t support_bound(Eigen::Index r) {
  return static_cast<std::size_t>(r * (r + 1) / 2);
}

void require_same_arms(const FeatureSet& features, const DesignPolicy& policy) {
  if (features.num_arms() != policy.num_arms()) {
    throw DimError("policy has " + std::to_string(policy.num_arms()) +
                   " entries for " + std::to_string(features.num_arms()) + " arms");
  }
}

// Frank–Wolfe state for the D-optimal problem on full-rank projected
// features Z (r × K).
class DOptimalSolver {
 public:
  explicit DOptimalSolver(const Matrix& z) : z_(z), r_(static_cast<double>(z.rows())) {}

  Vector initial_weights() const {
    // Uniform over r linearly independent arms picked by pivoted QR.
    Eigen::ColPivHouseholderQR<Matrix> qr(z_);
    Vector p = Vector::Zero(z_.cols());
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = 0; k < z_.rows(); ++k) p(perm(k)) = 1.0 / r_;
    return p;
  }

  // g_i = z_iᵀ M(p)⁻¹ z_i. Infinite entries signal a singular M.
  Vector leverages(const Vector& p) const {
    const Matrix m = z_ * p.asDiagonal() * z_.transpose();
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
      return Vector::Constant(z_.cols(), std::numeric_limits<double>::infinity());
    }
    const Matrix w = llt.solve(z_);
    return z_.cwiseProduct(w).colwise().sum().transpose();
  }

  // One Frank–Wolfe step with away steps and exact line search on
  // log det M(p). Returns false if no progress is possible.
  bool step(Vector& p, const Vector& g) const {
    Eigen::Index j = 0;
    g.maxCoeff(&j);
    Eigen::Index k = -1;
    double g_k = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) > 0.0 && g(i) < g_k) {
        g_k = g(i);
        k = i;
      }
    }
    const double g_j = g(j);
    const bool can_go_away = k >= 0 && p(k) < 1.0;
    if (!can_go_away || g_j - r_ >= r_ - g_k) {
      if (!(g_j > r_)) return false;
      const double alpha = (g_j - r_) / (r_ * (g_j - 1.0));
      p *= (1.0 - alpha);
      p(j) += alpha;
      return true;
    }
    // Away step: α < 0, bounded so that p_k stays nonnegative.
    const double alpha_drop = -p(k) / (1.0 - p(k));
    double alpha = alpha_drop;
    if (g_k > 1.0) alpha = std::max(alpha_drop, (g_k - r_) / (r_ * (g_k - 1.0)));
    if (!(alpha < 0.0)) return false;
    p *= (1.0 - alpha);
    if (alpha == alpha_drop) {
      p(k) = 0.0;
    } else {
      p(k) += alpha;
    }
    return true;
  }

  // Zeroes tiny weights and folds arms with identical z zᵀ into the
  // smallest index.
  void prune(Vector& p) const {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) < kPruneWeight) p(i) = 0.0;
    }
    const double scale = std::max(1.0, z_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) == 0.0) continue;
      for (Eigen::Index j = i + 1; j < p.size(); ++j) {
        if (p(j) == 0.0) continue;
        const double same = (z_.col(i) - z_.col(j)).cwiseAbs().maxCoeff();
        const double flip = (z_.col(i) + z_.col(j)).cwiseAbs().maxCoeff();
        if (std::min(same, flip) <= 1e-14 * scale) {
          p(i) += p(j);
          p(j) = 0.0;
        }
      }
    }
    p /= p.sum();
  }

  // Carathéodory reduction: moves along the null space of
  // p ↦ Σ p_i z_i z_iᵀ until the support fits in r(r+1)/2. The moment
  // matrix is kept fixed and total mass can only shrink, so after
  // renormalization every leverage is unchanged or smaller.
  void reduce_support(Vector& p) const {
    const Eigen::Index r = z_.rows();
    const std::size_t bound = support_bound(r);
    while (true) {
      std::vector<Eigen::Index> supp;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) > 0.0) supp.push_back(i);
      }
      if (supp.size() <= bound) return;

      const Eigen::Index rows = static_cast<Eigen::Index>(bound);
      const Eigen::Index cols = static_cast<Eigen::Index>(supp.size());
      Matrix a(rows, cols);
      for (Eigen::Index c = 0; c < cols; ++c) {
        const auto zc = z_.col(supp[c]);
        Eigen::Index row = 0;
        for (Eigen::Index u = 0; u < r; ++u) {
          for (Eigen::Index v = u; v < r; ++v) a(row++, c) = zc(u) * zc(v);
        }
      }
      Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
      Vector dir = svd.matrixV().col(cols - 1);
      if (dir.sum() > 0.0) dir = -dir;

      double step = std::numeric_limits<double>::infinity();
      Eigen::Index hit = -1;
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (dir(c) < 0.0) {
          const double s = p(supp[c]) / -dir(c);
          if (s < step) {
            step = s;
            hit = c;
          }
        }
      }
      if (hit < 0) return;  // numerically zero direction
      for (Eigen::Index c = 0; c < cols; ++c) {
        p(supp[c]) = std::max(0.0, p(supp[c]) + step * dir(c));
      }
      p(supp[hit]) = 0.0;
      p /= p.sum();
    }
  }

 private:
  const Matrix& z_;
  double r_;
};

double max_leverage_via_norms(const Matrix& z, const Vector& p) {
  const PsdMatrix m(z * p.asDiagonal() * z.transpose());
  double best = 0.0;
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const NormResult n = weighted_inv_norm(m, z.col(i));
    const double v = n.value();
    best = std::max(best, v * v);
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// FeatureSet

FeatureSet::FeatureSet(Matrix columns, NormAudit audit) : x_(std::move(columns)) {
  if (!x_.allFinite()) throw InvalidMatrix("feature matrix has non-finite entries");
  if (x_.rows() == 0) throw DimError("features must have positive dimension");
  if (x_.cols() == 0) throw DimError("feature set has no arms");
  if (audit == NormAudit::Warn) {
    for (Eigen::Index i = 0; i < x_.cols(); ++i) {
      const double n = x_.col(i).norm();
      if (n > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "feature " << i << " has norm " << n << " > 1";
        warn(msg.str());
      }
    }
  }
}

FeatureSet FeatureSet::from_rows(const std::vector<std::vector<double>>& rows,
                                 NormAudit audit) {
  if (rows.empty()) throw DimError("feature set has no arms");
  const std::size_t d = rows.front().size();
  Matrix x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw DimError("ragged feature rows");
    for (std::size_t k = 0; k < d; ++k) {
      x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = rows[i][k];
    }
  }
  return FeatureSet(std::move(x), audit);
}

double FeatureSet::max_norm() const { return x_.colwise().norm().maxCoeff(); }

Eigen::Index FeatureSet::rank() const { return span_basis(x_).cols(); }

FeatureSet FeatureSet::subset(std::span<const Arm> arms) const {
  Matrix sub(x_.rows(), static_cast<Eigen::Index>(arms.size()));
  for (std::size_t k = 0; k < arms.size(); ++k) {
    if (arms[k] < 0 || arms[k] >= num_arms()) throw DimError("subset: arm out of range");
    sub.col(static_cast<Eigen::Index>(k)) = x_.col(arms[k]);
  }
  return FeatureSet(std::move(sub), NormAudit::Skip);
}

// ---------------------------------------------------------------------------
// DesignPolicy

DesignPolicy::DesignPolicy(Vector probabilities) : p_(std::move(probabilities)) {
  if (p_.size() == 0) throw DimError("empty policy");
  if (!p_.allFinite() || p_.minCoeff() < 0.0) {
    throw InvalidSample("policy entries must be finite and nonnegative");
  }
  const double total = p_.sum();
  if (std::abs(total - 1.0) > kSumTol) {
    throw InvalidSample("policy sums to " + std::to_string(total));
  }
  p_ /= total;
}

DesignPolicy DesignPolicy::point_mass(Eigen::Index num_arms, Arm arm) {
  Vector p = Vector::Zero(num_arms);
  p(arm) = 1.0;
  return DesignPolicy(std::move(p));
}

DesignPolicy DesignPolicy::uniform(Eigen::Index num_arms) {
  return DesignPolicy(Vector::Constant(num_arms, 1.0 / static_cast<double>(num_arms)));
}

std::vector<Arm> DesignPolicy::support() const {
  std::vector<Arm> out;
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (p_(i) > 0.0) out.push_back(i);
  }
  return out;
}

std::size_t DesignPolicy::support_size() const {
  return static_cast<std::size_t>((p_.array() > 0.0).count());
}

// ---------------------------------------------------------------------------
// Designs

GOptimalResult g_optimal(const FeatureSet& features, const GOptimalOptions& opts) {
  if (!(opts.fw_tol > 0.0)) throw InvalidSample("fw_tol must be positive");
  const Matrix basis = span_basis(features.matrix());
  const Eigen::Index r = basis.cols();
  if (r == 0) throw DegenerateFeatures("all features are zero");
  const Eigen::Index d = features.dim();
  const int max_iters = opts.max_iters > 0
                            ? opts.max_iters
                            : static_cast<int>(std::max<Eigen::Index>(10 * d * d, kMinDefaultIters));

  const Matrix z = basis.transpose() * features.matrix();
  const DOptimalSolver solver(z);
  const double target = static_cast<double>(r) * (1.0 + opts.fw_tol);

  Vector p = solver.initial_weights();
  Vector best_p = p;
  double best_value = std::numeric_limits<double>::infinity();
  int iters = 0;

  auto result_for = [&](const Vector& weights, int it) {
    return GOptimalResult{DesignPolicy(weights), max_leverage_via_norms(z, weights), r, it};
  };

  for (int round = 0; round < kMaxRefinements; ++round) {
    bool converged = false;
    while (true) {
      const Vector g = solver.leverages(p);
      const double g_max = g.maxCoeff();
      if (g_max < best_value) {
        best_value = g_max;
        best_p = p;
      }
      if (g_max <= target) {
        converged = true;
        break;
      }
      if (iters >= max_iters || !solver.step(p, g)) break;
      ++iters;
    }
    if (!converged) break;

    Vector pruned = p;
    solver.prune(pruned);
    solver.reduce_support(pruned);
    solver.prune(pruned);
    GOptimalResult res = result_for(pruned, iters);
    if (res.max_norm_sq <= target) return res;
    p = pruned;  // pruning cost a little; keep iterating from the pruned point
  }

  std::ostringstream msg;
  msg << "g_optimal did not reach tolerance " << opts.fw_tol << " in " << max_iters
      << " iterations (best max norm² " << best_value << ", target " << target << ")";
  throw ConvergenceError(msg.str(), result_for(best_p, iters));
}

DeoResult deo(const FeatureSet& features, Arm anchor, const GOptimalOptions& opts) {
  const Eigen::Index k = features.num_arms();
  if (k < 2) throw DegenerateFeatures("a design needs at least two arms");
  if (anchor < 0 || anchor >= k) throw InvalidArm("anchor out of range");

  Matrix diffs(features.dim(), k - 1);
  std::vector<Arm> arm_of(static_cast<std::size_t>(k - 1));
  for (Eigen::Index i = 0, c = 0; i < k; ++i) {
    if (i == anchor) continue;
    diffs.col(c) = features.arm(i) - features.arm(anchor);
    arm_of[static_cast<std::size_t>(c)] = i;
    ++c;
  }
  if (diffs.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateFeatures("all arms have identical features");
  }

  const GOptimalResult inner = g_optimal(FeatureSet(diffs, NormAudit::Skip), opts);
  Vector p = Vector::Zero(k);
  p(anchor) = 0.5;
  for (std::size_t c = 0; c < arm_of.size(); ++c) {
    p(arm_of[c]) = 0.5 * inner.policy[static_cast<Eigen::Index>(c)];
  }
  DesignPolicy policy(std::move(p));
  DesignCertificate cert = design_certificate(features, policy, anchor);
  return DeoResult{std::move(policy), cert, anchor};
}

PolicyMoments policy_moments(const FeatureSet& features, const DesignPolicy& policy) {
  require_same_arms(features, policy);
  const Matrix& x = features.matrix();
  const Vector& p = policy.probabilities();
  Vector mean = x * p;
  const Matrix centered = x.colwise() - mean;
  Matrix cov = centered * p.asDiagonal() * centered.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return PolicyMoments{std::move(mean), PsdMatrix(cov)};
}

PsdMatrix covariance_pairwise(const FeatureSet& features, const DesignPolicy& policy) {
  require_same_arms(features, policy);
  const Eigen::Index d = features.dim();
  PsdMatrix out = PsdMatrix::zero(d);
  for (Eigen::Index i = 0; i < features.num_arms(); ++i) {
    if (policy[i] == 0.0) continue;
    for (Eigen::Index j = i + 1; j < features.num_arms(); ++j) {
      const double w = policy[i] * policy[j];
      if (w == 0.0) continue;
      out.add_outer(features.arm(i) - features.arm(j), w);
    }
  }
  return out;
}

DesignCertificate design_certificate(const FeatureSet& features, const DesignPolicy& policy,
                                     Arm anchor) {
  require_same_arms(features, policy);
  if (anchor < 0 || anchor >= features.num_arms()) throw InvalidArm("anchor out of range");
  const Matrix diffs = features.matrix().colwise() - features.matrix().col(anchor);
  const Matrix basis = span_basis(diffs);

  DesignCertificate cert;
  cert.support_size = policy.support_size();
  cert.effective_dim = basis.cols();
  if (basis.cols() == 0) return cert;

  const PolicyMoments mom = policy_moments(features, policy);
  const PsdMatrix cov(basis.transpose() * mom.covariance.matrix() * basis);
  for (Eigen::Index i = 0; i < features.num_arms(); ++i) {
    const Vector a = basis.transpose() * diffs.col(i);
    const Vector c = basis.transpose() * (features.arm(i) - mom.mean);
    cert.max_anchor_norm = std::max(cert.max_anchor_norm, weighted_inv_norm(cov, a).value());
    cert.max_centered_norm = std::max(cert.max_centered_norm, weighted_inv_norm(cov, c).value());
  }
  return cert;
}

}  // namespace sbandit
