#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/rng.hpp"

namespace tnoodl {
namespace {

void expect_matrix_near(const Matrix& a, const Matrix& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) EXPECT_NEAR(a(i, j), b(i, j), tol) << i << "," << j;
}

double vec_residual(const Matrix& m, const Rank1Svd& s, bool transpose) {
  std::vector<double> r(transpose ? m.cols() : m.rows(), 0.0);
  if (!transpose) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) r[i] += m(i, j) * s.v1[j];
      r[i] -= s.sigma1 * s.u1[i];
    }
  } else {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      for (std::size_t i = 0; i < m.rows(); ++i) r[j] += m(i, j) * s.u1[i];
      r[j] -= s.sigma1 * s.v1[j];
    }
  }
  return norm2(r);
}

TEST(Matrix, RejectsNonFiniteAndBadLength) {
  EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(Matrix(1, 2, {1.0, std::nan("")}), NumericError);
  EXPECT_THROW(Matrix(1, 1, {INFINITY}), NumericError);
}

TEST(Matrix, ColumnMajorStorage) {
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  const std::vector<double> expected{1, 3, 2, 4};
  EXPECT_TRUE(std::equal(m.data().begin(), m.data().end(), expected.begin()));
  EXPECT_EQ(m.col(1)[0], 2.0);
}

TEST(Matmul, Examples) {
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(Matrix::identity(2), m), m);
  EXPECT_EQ(matmul(m, Matrix::from_rows({{1}, {1}})), Matrix::from_rows({{3}, {7}}));
  EXPECT_EQ(matmul(m, Matrix(2, 3)), Matrix(2, 3));
}

TEST(Matmul, DimensionMismatchNamesShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3 * 2x3"), std::string::npos);
  }
}

TEST(Matmul, TransposedProductMatchesExplicit) {
  Rng rng(7);
  const Matrix a = oracle::random_matrix(5, 3, rng);
  const Matrix b = oracle::random_matrix(5, 4, rng);
  expect_matrix_near(matmul_tn(a, b), matmul(transpose(a), b), 1e-14);
}

TEST(Rank1Svd, Diagonal) {
  const auto s = rank1_svd(Matrix::diag({3, 1}));
  // Vector error is bounded by residual / gap = 1e-12 * 3 / 2.
  const double vtol = 1.5e-12;
  EXPECT_NEAR(s.sigma1, 3.0, 1e-14);
  EXPECT_NEAR(s.u1[0], 1.0, vtol);
  EXPECT_NEAR(s.u1[1], 0.0, vtol);
  EXPECT_NEAR(s.v1[0], 1.0, vtol);
  EXPECT_NEAR(s.v1[1], 0.0, vtol);
}

TEST(Rank1Svd, RankOneClosedForm) {
  // outer([1,0],[2,3]): sigma = sqrt(13), u = e1, v = [2,3]/sqrt(13)
  const std::vector<double> u{1, 0}, v{2, 3};
  const auto s = rank1_svd(outer(u, v));
  const double r13 = std::sqrt(13.0);
  EXPECT_NEAR(s.sigma1, r13, 1e-14);
  EXPECT_NEAR(s.u1[0], 1.0, 1e-14);
  EXPECT_NEAR(s.u1[1], 0.0, 1e-14);
  EXPECT_NEAR(s.v1[0], 2.0 / r13, 1e-14);
  EXPECT_NEAR(s.v1[1], 3.0 / r13, 1e-14);
}

TEST(Rank1Svd, ZeroMatrixConvention) {
  const auto s = rank1_svd(Matrix(2, 2));
  EXPECT_EQ(s.sigma1, 0.0);
  EXPECT_EQ(s.u1, (std::vector<double>{1, 0}));
  EXPECT_EQ(s.v1, (std::vector<double>{1, 0}));
}

TEST(Rank1Svd, SignConventionLeadingEntryNonnegative) {
  const std::vector<double> u{0.3, -0.9}, v{1, 2};
  const auto s = rank1_svd(outer(u, v));
  EXPECT_GT(s.u1[1], 0.0);  // |-0.9| is the largest entry, flipped positive
  EXPECT_LT(s.u1[0], 0.0);
  EXPECT_LT(s.v1[0], 0.0);
}

TEST(Rank1Svd, StartAnnihilatedFallsBack) {
  // Column-norm start [1,1]/sqrt2 is in the null space of [[1,-1]].
  const auto s = rank1_svd(Matrix::from_rows({{1, -1}}));
  EXPECT_NEAR(s.sigma1, std::sqrt(2.0), 1e-14);
}

TEST(Rank1Svd, NonConvergenceCarriesResidual) {
  Rng rng(3);
  const Matrix m = oracle::random_matrix(6, 6, rng);
  try {
    rank1_svd(m, 1e-15, 1);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(Rank1Svd, ArgumentValidation) {
  EXPECT_THROW(rank1_svd(Matrix()), DimensionError);
  EXPECT_THROW(rank1_svd(Matrix::identity(2), 0.0), Error);
  EXPECT_THROW(rank1_svd(Matrix::identity(2), 1e-12, 0), Error);
}

// Residuals on return stay within tol * max(1, sigma).
TEST(Rank1SvdProperty, ResidualsWithinTolerance) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.next_u64() % 8, c = 1 + rng.next_u64() % 8;
    const Matrix m = oracle::random_matrix(r, c, rng);
    const double tol = 1e-12;
    const auto s = rank1_svd(m, tol);
    EXPECT_LE(vec_residual(m, s, false), tol * std::max(1.0, s.sigma1));
    EXPECT_LE(vec_residual(m, s, true), tol * std::max(1.0, s.sigma1));
    EXPECT_NEAR(norm2(s.u1), 1.0, 1e-12);
    EXPECT_NEAR(norm2(s.v1), 1.0, 1e-12);
  }
}

TEST(Rank1SvdProperty, RecoversScaledRankOne) {
  Rng rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t r = 2 + rng.next_u64() % 9, c = 2 + rng.next_u64() % 9;
    const auto u = oracle::random_unit(r, rng);
    const auto v = oracle::random_unit(c, rng);
    const double sigma = std::pow(10.0, rng.uniform(-6.0, 6.0));
    const auto s = rank1_svd(sigma * outer(u, v));
    EXPECT_NEAR(s.sigma1 / sigma, 1.0, 1e-10);
    const double sign = dot(s.u1, u) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < r; ++i) EXPECT_NEAR(s.u1[i], sign * u[i], 1e-8);
    for (std::size_t j = 0; j < c; ++j) EXPECT_NEAR(s.v1[j], sign * v[j], 1e-8);
  }
}

TEST(SpectralNorm, Examples) {
  EXPECT_NEAR(spectral_norm(Matrix::identity(3)), 1.0, 1e-14);
  EXPECT_NEAR(spectral_norm(Matrix::diag({5, 2, 1})), 5.0, 1e-12);
  EXPECT_EQ(spectral_norm(Matrix(3, 2)), 0.0);
}

TEST(SpectralNorm, MatchesJacobiOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = oracle::random_matrix(4, 4, rng);
    const double expected = oracle::jacobi_singular_values(m).front();
    EXPECT_NEAR(spectral_norm(m) / expected, 1.0, 1e-8);
  }
}

// |Mx| over random unit x never exceeds the reported norm.
TEST(SpectralNormProperty, DominatesRandomProbes) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = oracle::random_matrix(5, 4, rng);
    const double sn = spectral_norm(m);
    double probe_max = 0.0;
    for (int k = 0; k < 100; ++k) {
      const auto x = oracle::random_unit(4, rng);
      std::vector<double> mx(5, 0.0);
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) mx[i] += m(i, j) * x[j];
      probe_max = std::max(probe_max, norm2(mx));
    }
    EXPECT_GE(sn * (1 + 1e-6), probe_max);
    EXPECT_LE(probe_max, sn * (1 + 1e-6));
  }
}

TEST(NormalizeColumns, Examples) {
  const Matrix n = normalize_columns(Matrix::from_rows({{3}, {4}}));
  EXPECT_NEAR(n(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(n(1, 0), 0.8, 1e-15);
  const Matrix unit = Matrix::identity(3);
  EXPECT_EQ(normalize_columns(unit), unit);
}

TEST(NormalizeColumns, ZeroColumnReportsIndex) {
  try {
    normalize_columns(Matrix::from_rows({{1, 0, 2}, {0, 0, 1}}));
    FAIL();
  } catch (const CollapsedColumnError& e) {
    EXPECT_EQ(e.column(), 1u);
  }
}

TEST(NormalizeColumnsProperty, Idempotent) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix once = normalize_columns(oracle::random_matrix(7, 5, rng));
    expect_matrix_near(normalize_columns(once), once, 1e-15);
    for (std::size_t j = 0; j < once.cols(); ++j) EXPECT_NEAR(norm2(once.col(j)), 1.0, 1e-15);
  }
}

}  // namespace
}  // namespace tnoodl
