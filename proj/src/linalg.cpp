#include "sbandit/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sbandit/errors.hpp"

namespace sbandit {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-10;
constexpr double kSandwichSlack = 1e-9;

void require_finite(const Matrix& m) {
  if (!m.allFinite()) throw InvalidMatrix("matrix has non-finite entries");
}

void require_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw InvalidMatrix("matrix is not square (" + std::to_string(m.rows()) +
                        "x" + std::to_string(m.cols()) + ")");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw InvalidMatrix("matrix is not symmetric");
  }
}

}  // namespace

PsdMatrix::PsdMatrix(const Matrix& m) {
  require_finite(m);
  require_symmetric(m);
  m_ = 0.5 * (m + m.transpose());
  if (m_.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  const double bottom = es.eigenvalues().minCoeff();
  if (bottom < -kPsdTol * std::max(top, 0.0)) {
    throw InvalidMatrix("matrix is not positive semidefinite (min eigenvalue " +
                        std::to_string(bottom) + ")");
  }
}

PsdMatrix PsdMatrix::zero(Eigen::Index dim) {
  return PsdMatrix(Matrix::Zero(dim, dim), Unchecked{});
}

PsdMatrix PsdMatrix::identity(Eigen::Index dim) {
  return PsdMatrix(Matrix::Identity(dim, dim), Unchecked{});
}

void PsdMatrix::add_outer(const Vector& v, double weight) {
  if (v.size() != dim()) throw DimError("add_outer: dimension mismatch");
  if (!(weight >= 0.0)) throw InvalidMatrix("add_outer: negative weight");
  m_.selfadjointView<Eigen::Lower>().rankUpdate(v, weight);
  m_.triangularView<Eigen::StrictlyUpper>() = m_.transpose();
}

SymEigen eig_sym(const Matrix& a) {
  require_finite(a);
  require_symmetric(a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) throw InvalidMatrix("eigensolver failed");
  // Eigen returns ascending order.
  SymEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

double NormResult::value() const {
  return in_range_ ? value_ : std::numeric_limits<double>::infinity();
}

NormResult weighted_inv_norm(const PsdMatrix& a, const Vector& x,
                             double range_tol) {
  if (x.size() != a.dim()) {
    throw DimError("weighted_inv_norm: matrix is " + std::to_string(a.dim()) +
                   "-dimensional, vector has " + std::to_string(x.size()) +
                   " entries");
  }
  if (!(range_tol > 0.0)) throw InvalidMatrix("range_tol must be positive");

  const SymEigen es = eig_sym(a);
  const double top = es.values.size() > 0 ? es.values(0) : 0.0;
  const Vector coeffs = es.vectors.transpose() * x;

  double quad = 0.0;
  double null_sq = 0.0;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    if (top > 0.0 && es.values(k) > range_tol * top) {
      quad += coeffs(k) * coeffs(k) / es.values(k);
    } else {
      null_sq += coeffs(k) * coeffs(k);
    }
  }
  if (std::sqrt(null_sq) > range_tol * x.norm()) return NormResult::infinite();
  return NormResult::finite(std::sqrt(quad));
}

Vector generalized_eigenvalues(const PsdMatrix& b, const PsdMatrix& a) {
  if (a.dim() != b.dim()) throw DimError("generalized_eigenvalues: dimension mismatch");
  Eigen::LLT<Matrix> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    throw SingularMatrix("reference matrix is not positive definite");
  }
  // L⁻¹ B L⁻ᵀ has the same spectrum as the pencil (B, A).
  Matrix reduced = llt.matrixL().solve(b.matrix());
  reduced = llt.matrixL().solve(reduced.transpose()).transpose();
  reduced = 0.5 * (reduced + reduced.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(reduced, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

bool psd_sandwich(const PsdMatrix& a, const PsdMatrix& b, double lower,
                  double upper) {
  const Vector mu = generalized_eigenvalues(b, a);
  if (mu.size() == 0) return true;
  return mu.minCoeff() >= lower - kSandwichSlack &&
         mu.maxCoeff() <= upper + kSandwichSlack;
}

bool psd_between(const PsdMatrix& a, const PsdMatrix& b, double c) {
  if (!(c > 1.0)) throw InvalidMatrix("psd_between: c must exceed 1");
  return psd_sandwich(a, b, 1.0 / c, c);
}

Matrix span_basis(const Matrix& columns, double rel_tol) {
  const Eigen::Index d = columns.rows();
  if (columns.cols() == 0 || columns.cwiseAbs().maxCoeff() == 0.0) {
    return Matrix(d, 0);
  }
  Eigen::BDCSVD<Matrix> svd(columns, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > rel_tol * s(0)) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace sbandit
