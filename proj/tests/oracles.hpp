#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "sbandit/design.hpp"
#include "sbandit/random.hpp"

namespace oracle {

using sbandit::Matrix;
using sbandit::Vector;

// sqrt(xᵀ(A + λI)⁻¹x) by a Cholesky solve.
inline double ridge_norm(const Matrix& a, const Vector& x, double lambda) {
  const Matrix reg = a + lambda * Matrix::Identity(a.rows(), a.cols());
  const Eigen::LLT<Matrix> llt(reg);
  return std::sqrt(x.dot(llt.solve(x)));
}

// sqrt(xᵀA⁻¹x) via an explicit inverse.
inline double direct_norm(const Matrix& a, const Vector& x) {
  return std::sqrt(x.dot(a.inverse() * x));
}

// Σ_i p_i (x_i − x̄)(x_i − x̄)ᵀ written out term by term.
inline Matrix covariance_by_definition(const Matrix& x, const Vector& p) {
  const Vector mean = x * p;
  Matrix s = Matrix::Zero(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const Vector c = x.col(i) - mean;
    s += p(i) * c * c.transpose();
  }
  return s;
}

// max_i x_iᵀ M(p)⁻¹ x_i for M(p) = Σ p_i x_i x_iᵀ (full rank only).
inline double max_leverage(const Matrix& x, const Vector& p) {
  Matrix m = Matrix::Zero(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.cols(); ++i) m += p(i) * x.col(i) * x.col(i).transpose();
  const Matrix inv = m.inverse();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) worst = std::max(worst, x.col(i).dot(inv * x.col(i)));
  return worst;
}

// G-optimal value for 1-d arms by grid search over two-point designs; in
// one dimension the optimum puts all mass on the largest |x_i|, so the
// grid also confirms no other split does better.
inline double g_value_1d_grid(const std::vector<double>& xs, int steps = 2000) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < xs.size(); ++a) {
    for (std::size_t b = a; b < xs.size(); ++b) {
      for (int s = 0; s <= steps; ++s) {
        const double w = static_cast<double>(s) / steps;
        const double m = w * xs[a] * xs[a] + (1.0 - w) * xs[b] * xs[b];
        if (m <= 0.0) continue;
        double worst = 0.0;
        for (double x : xs) worst = std::max(worst, x * x / m);
        best = std::min(best, worst);
      }
    }
  }
  return best;
}

// Ridge estimate recomputed from a full sample list.
inline Vector batch_ridge(const std::vector<Vector>& xs, const std::vector<double>& rs,
                          double beta) {
  const Eigen::Index d = xs.front().size();
  Matrix b = beta * Matrix::Identity(d, d);
  Vector m = Vector::Zero(d);
  for (std::size_t s = 0; s < xs.size(); ++s) {
    b += xs[s] * xs[s].transpose();
    m += rs[s] * xs[s];
  }
  return b.ldlt().solve(m);
}

// Points drawn uniformly in the unit ball, one per column.
inline Matrix random_ball(sbandit::Rng& rng, Eigen::Index d, Eigen::Index k) {
  Matrix x(d, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Vector v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = sbandit::standard_normal(rng);
    const double r = std::pow(sbandit::uniform01(rng), 1.0 / static_cast<double>(d));
    x.col(i) = r * v / v.norm();
  }
  return x;
}

inline Vector random_simplex(sbandit::Rng& rng, Eigen::Index k) {
  Vector p(k);
  for (Eigen::Index i = 0; i < k; ++i) p(i) = -std::log(1.0 - sbandit::uniform01(rng));
  return p / p.sum();
}

// Random PSD matrix of the given rank, with its range basis.
struct RankDeficient {
  Matrix a;
  Matrix basis;
};

inline RankDeficient random_rank_deficient(sbandit::Rng& rng, Eigen::Index d, Eigen::Index r) {
  Matrix g(d, r);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) g(i, j) = sbandit::standard_normal(rng);
  }
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ() * Matrix::Identity(d, r);
  Vector lam(r);
  for (Eigen::Index j = 0; j < r; ++j) lam(j) = 0.5 + 2.0 * sbandit::uniform01(rng);
  Matrix a = q * lam.asDiagonal() * q.transpose();
  a = 0.5 * (a + a.transpose()).eval();
  return {a, q};
}

}  // namespace oracle
