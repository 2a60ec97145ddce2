#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sbandit/errors.hpp"
#include "sbandit/linalg.hpp"
#include "sbandit/random.hpp"

using namespace sbandit;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(PsdMatrix, AcceptsSymmetricPsd) {
  const PsdMatrix a(mat2(2, 1, 1, 2));
  EXPECT_EQ(a.dim(), 2);
  EXPECT_DOUBLE_EQ(a.trace(), 4.0);
}

TEST(PsdMatrix, RejectsAsymmetric) {
  EXPECT_THROW(PsdMatrix(mat2(1, 0.5, 0.0, 1)), InvalidMatrix);
}

TEST(PsdMatrix, RejectsIndefinite) {
  EXPECT_THROW(PsdMatrix(mat2(1, 0, 0, -1)), InvalidMatrix);
}

TEST(PsdMatrix, RejectsNonFinite) {
  EXPECT_THROW(PsdMatrix(mat2(1, 0, 0, NAN)), InvalidMatrix);
}

TEST(PsdMatrix, RejectsNonSquare) {
  EXPECT_THROW(PsdMatrix(Matrix::Ones(2, 3)), InvalidMatrix);
}

TEST(PsdMatrix, AddOuterMatchesDenseUpdate) {
  PsdMatrix a = PsdMatrix::identity(3);
  Vector v(3);
  v << 1, -2, 0.5;
  a.add_outer(v, 0.25);
  const Matrix expected = Matrix::Identity(3, 3) + 0.25 * v * v.transpose();
  EXPECT_LE((a.matrix() - expected).norm(), 1e-15);
  EXPECT_TRUE(a.matrix().isApprox(a.matrix().transpose()));
}

TEST(EigSym, Identity) {
  const SymEigen e = eig_sym(Matrix::Identity(3, 3));
  EXPECT_TRUE(e.values.isApprox(Vector::Ones(3)));
}

TEST(EigSym, DiagonalDescendingWithBasisVectors) {
  const SymEigen e = eig_sym(mat2(1, 0, 0, 4));
  EXPECT_DOUBLE_EQ(e.values(0), 4.0);
  EXPECT_DOUBLE_EQ(e.values(1), 1.0);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1.0, 1e-15);
}

TEST(EigSym, CharacteristicPolynomial) {
  const SymEigen e = eig_sym(mat2(2, 1, 1, 2));
  EXPECT_NEAR(e.values(0), 3.0, 1e-14);
  EXPECT_NEAR(e.values(1), 1.0, 1e-14);
}

TEST(EigSym, Reconstructs) {
  Rng rng = make_rng(3, 0);
  const auto rd = oracle::random_rank_deficient(rng, 6, 6);
  const SymEigen e = eig_sym(rd.a);
  const Matrix back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
  EXPECT_LE((back - rd.a).norm(), 1e-12);
}

TEST(WeightedInvNorm, IdentityWeighting) {
  const NormResult r = weighted_inv_norm(PsdMatrix::identity(2), vec2(3, 4));
  ASSERT_TRUE(r.in_range());
  EXPECT_NEAR(r.value(), 5.0, 1e-14);
}

TEST(WeightedInvNorm, OrthogonalToRangeIsInfinite) {
  const NormResult r = weighted_inv_norm(PsdMatrix(mat2(1, 0, 0, 0)), vec2(0, 1));
  EXPECT_TRUE(r.is_infinite());
  EXPECT_FALSE(r.in_range());
  EXPECT_TRUE(std::isinf(r.value()));
}

TEST(WeightedInvNorm, HandComputedInverse) {
  const PsdMatrix a(mat2(3.0 / 16, -1.0 / 16, -1.0 / 16, 3.0 / 16));
  const NormResult r = weighted_inv_norm(a, vec2(1, 0));
  ASSERT_TRUE(r.in_range());
  EXPECT_NEAR(r.value(), std::sqrt(6.0), 1e-12);
}

TEST(WeightedInvNorm, DimensionMismatch) {
  EXPECT_THROW(weighted_inv_norm(PsdMatrix::identity(3), vec2(1, 0)), DimError);
}

TEST(WeightedInvNorm, ZeroVectorIsZero) {
  const NormResult r = weighted_inv_norm(PsdMatrix::zero(2), Vector::Zero(2));
  ASSERT_TRUE(r.in_range());
  EXPECT_EQ(r.value(), 0.0);
}

TEST(WeightedInvNorm, MatchesDirectSolveOnPositiveDefinite) {
  Rng rng = make_rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 2 + trial % 7;
    const auto rd = oracle::random_rank_deficient(rng, d, d);
    Vector x(d);
    for (Eigen::Index i = 0; i < d; ++i) x(i) = standard_normal(rng);
    const NormResult r = weighted_inv_norm(PsdMatrix(rd.a), x);
    ASSERT_TRUE(r.in_range());
    const double ref = oracle::direct_norm(rd.a, x);
    EXPECT_NEAR(r.value(), ref, 1e-8 * ref);
  }
}

TEST(WeightedInvNorm, RidgeLimitOnRankDeficient) {
  Rng rng = make_rng(12, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index d = 3 + trial % 6;
    const Eigen::Index rank = 1 + trial % (d - 1);
    const auto rd = oracle::random_rank_deficient(rng, d, rank);
    Vector coef(rank);
    for (Eigen::Index i = 0; i < rank; ++i) coef(i) = standard_normal(rng);
    const Vector x = rd.basis * coef;
    const NormResult r = weighted_inv_norm(PsdMatrix(rd.a), x);
    ASSERT_TRUE(r.in_range());
    EXPECT_LE(std::abs(oracle::ridge_norm(rd.a, x, 1e-8) - r.value()), 1e-4 * r.value());

    Vector y = x;
    const Matrix null_proj = Matrix::Identity(d, d) - rd.basis * rd.basis.transpose();
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = standard_normal(rng);
    y += null_proj * z;
    EXPECT_TRUE(weighted_inv_norm(PsdMatrix(rd.a), y).is_infinite());
  }
}

TEST(GeneralizedEigenvalues, SingularReferenceThrows) {
  EXPECT_THROW(generalized_eigenvalues(PsdMatrix::identity(2), PsdMatrix(mat2(1, 0, 0, 0))),
               SingularMatrix);
}

TEST(PsdBetween, Equality) {
  EXPECT_TRUE(psd_between(PsdMatrix::identity(2), PsdMatrix::identity(2), 2.0));
}

TEST(PsdBetween, TooLarge) {
  EXPECT_FALSE(psd_between(PsdMatrix::identity(2), PsdMatrix(3.0 * Matrix::Identity(2, 2)), 2.0));
}

TEST(PsdBetween, DiagonalInside) {
  EXPECT_TRUE(psd_between(PsdMatrix::identity(2), PsdMatrix(mat2(0.6, 0, 0, 1.5)), 2.0));
}

TEST(PsdBetween, BoundaryWithinSlack) {
  EXPECT_TRUE(psd_between(PsdMatrix::identity(2), PsdMatrix(mat2(0.5, 0, 0, 2.0)), 2.0));
  EXPECT_FALSE(psd_between(PsdMatrix::identity(2), PsdMatrix(mat2(0.5, 0, 0, 2.001)), 2.0));
}

TEST(PsdBetween, RequiresCAboveOne) {
  EXPECT_THROW(psd_between(PsdMatrix::identity(2), PsdMatrix::identity(2), 1.0), InvalidMatrix);
}

TEST(PsdBetween, Symmetric) {
  Rng rng = make_rng(13, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = oracle::random_rank_deficient(rng, 4, 4).a;
    const auto b = oracle::random_rank_deficient(rng, 4, 4).a;
    const PsdMatrix pa(a), pb(b);
    for (double c : {1.5, 3.0, 10.0}) {
      EXPECT_EQ(psd_between(pa, pb, c), psd_between(pb, pa, c));
    }
  }
}

TEST(PsdSandwich, AsymmetricBounds) {
  const PsdMatrix a = PsdMatrix::identity(2);
  EXPECT_TRUE(psd_sandwich(a, PsdMatrix(mat2(0.5, 0, 0, 1.5)), 0.5, 1.5));
  EXPECT_FALSE(psd_sandwich(a, PsdMatrix(mat2(0.4, 0, 0, 1.0)), 0.5, 1.5));
  EXPECT_FALSE(psd_sandwich(a, PsdMatrix(mat2(1.0, 0, 0, 1.6)), 0.5, 1.5));
}

TEST(SpanBasis, RankAndOrthonormality) {
  Matrix cols(3, 4);
  cols << 1, 0, 1, 2,
          0, 1, 1, 0,
          0, 0, 0, 0;
  const Matrix q = span_basis(cols);
  ASSERT_EQ(q.cols(), 2);
  EXPECT_LE((q.transpose() * q - Matrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LE((q * q.transpose() * cols - cols).norm(), 1e-12);
}

TEST(SpanBasis, AllZero) {
  EXPECT_EQ(span_basis(Matrix::Zero(3, 2)).cols(), 0);
}
