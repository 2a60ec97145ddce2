#pragma once

#include <Eigen/Dense>

namespace sbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric positive semidefinite matrix.
///
/// Construction checks that every entry is finite, that the input is
/// symmetric to 1e-12 relative tolerance and that no eigenvalue falls below
/// -1e-10 times the largest one. The stored matrix is the exact symmetric
/// part of the input.
class PsdMatrix {
 public:
  explicit PsdMatrix(const Matrix& m);

  static PsdMatrix zero(Eigen::Index dim);
  static PsdMatrix identity(Eigen::Index dim);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace(); }

  /// this += weight * v vᵀ with weight >= 0; keeps the invariants without
  /// re-running the spectral check.
  void add_outer(const Vector& v, double weight = 1.0);

 private:
  struct Unchecked {};
  PsdMatrix(Matrix m, Unchecked) : m_(std::move(m)) {}

  Matrix m_;
};

struct SymEigen {
  Vector values;   ///< descending
  Matrix vectors;  ///< orthonormal columns, matching `values`
};

/// Symmetric eigendecomposition A = Q diag(λ) Qᵀ, eigenvalues descending.
/// Throws InvalidMatrix on non-finite or non-symmetric input.
SymEigen eig_sym(const Matrix& a);
inline SymEigen eig_sym(const PsdMatrix& a) { return eig_sym(a.matrix()); }

/// Result of an extended inverse-weighted norm: a finite value when the
/// vector lies in the range of the matrix, otherwise the Infinite marker.
class NormResult {
 public:
  static NormResult finite(double value) { return NormResult(value, true); }
  static NormResult infinite() { return NormResult(0.0, false); }

  bool in_range() const { return in_range_; }
  bool is_infinite() const { return !in_range_; }
  /// +inf when out of range.
  double value() const;

 private:
  NormResult(double v, bool in_range) : value_(v), in_range_(in_range) {}
  double value_;
  bool in_range_;
};

inline constexpr double kDefaultRangeTol = 1e-8;

/// ‖x‖_{A⁻¹} for PSD A, extended to singular A as the limit of
/// ‖x‖_{(A+λI)⁻¹} as λ → 0.
///
/// Eigenvalues at or below `range_tol * λ_max` are treated as null
/// directions. The result is finite iff the component of x in the null space
/// has norm at most `range_tol * ‖x‖`; the value is then sqrt(xᵀ A⁺ x).
NormResult weighted_inv_norm(const PsdMatrix& a, const Vector& x,
                             double range_tol = kDefaultRangeTol);

/// Eigenvalues μ of B v = μ A v, ascending. A must be positive definite.
Vector generalized_eigenvalues(const PsdMatrix& b, const PsdMatrix& a);

/// lower·A ⪯ B ⪯ upper·A, decided through the generalized eigenvalues of
/// (B, A) with 1e-9 slack. Throws SingularMatrix if A is not positive
/// definite.
bool psd_sandwich(const PsdMatrix& a, const PsdMatrix& b, double lower,
                  double upper);

/// (1/c)·A ⪯ B ⪯ c·A for c > 1.
bool psd_between(const PsdMatrix& a, const PsdMatrix& b, double c);

/// Orthonormal basis (d × r) of the column span of `columns`, with rank
/// decided by singular values above `rel_tol * σ_max`. Empty (d × 0) when
/// every column is zero.
Matrix span_basis(const Matrix& columns, double rel_tol = 1e-10);

}  // namespace sbandit
