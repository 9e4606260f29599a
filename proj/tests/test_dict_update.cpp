#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tnoodl/dict_update.hpp"
#include "tnoodl/rng.hpp"

namespace tnoodl {
namespace {

// Entries on a dyadic grid so every partial sum is exact and the result
// cannot depend on summation order.
Matrix dyadic(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = static_cast<double>(static_cast<int>(rng.next_u64() % 9) - 4) / 8.0;
  return m;
}

Matrix naive_gradient(const Matrix& a, const Matrix& x, const Matrix& y) {
  const Matrix r = matmul(a, x) - y;
  Matrix s(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c)
    for (std::size_t k = 0; k < x.rows(); ++k) s(k, c) = sign_of(x(k, c));
  return (1.0 / static_cast<double>(x.cols())) * matmul(r, transpose(s));
}

TEST(DefaultEtaA, TableAndNearestRank) {
  EXPECT_EQ(default_eta_A(50, 0.01, 0.01), 20.0);
  EXPECT_EQ(default_eta_A(50, 0.005, 0.005), 5.0);
  EXPECT_EQ(default_eta_A(150, 0.005, 0.005), 40.0);
  EXPECT_EQ(default_eta_A(300, 0.01, 0.01), 40.0);
  EXPECT_EQ(default_eta_A(450, 0.01, 0.01), 50.0);
  EXPECT_EQ(default_eta_A(600, 0.01, 0.01), 50.0);
  EXPECT_EQ(default_eta_A(10, 0.1, 0.1), 20.0);
  EXPECT_EQ(default_eta_A(1000, 0.1, 0.1), 50.0);
}

TEST(Gradient, SingleColumnExample) {
  // A = I, x = [2, 0], y = [1, 1]: residual [1, -1], sign(x) = [1, 0]
  const Matrix g = gradient(Matrix::identity(2), Matrix::from_rows({{2}, {0}}),
                            Matrix::from_rows({{1}, {1}}));
  EXPECT_EQ(g, Matrix::from_rows({{1, 0}, {-1, 0}}));
}

TEST(Gradient, Errors) {
  EXPECT_THROW(gradient(Matrix::identity(2), Matrix(2, 0), Matrix(2, 0)), Error);
  EXPECT_THROW(gradient(Matrix::identity(2), Matrix(3, 1), Matrix(2, 1)), DimensionError);
}

TEST(Gradient, MatchesNaiveFormula) {
  Rng rng(31);
  const Matrix a = oracle::random_matrix(10, 4, rng);
  Matrix x = oracle::random_matrix(4, 100, rng);
  for (double& v : x.data())
    if (std::abs(v) < 0.7) v = 0.0;
  const Matrix y = oracle::random_matrix(10, 100, rng);
  const Matrix g = gradient(a, x, y);
  const Matrix ref = naive_gradient(a, x, y);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(g(i, j), ref(i, j), 1e-12);
}

TEST(GradientProperty, ThreadCountInvariantBitwise) {
  Rng rng(32);
  const Matrix a = oracle::random_matrix(12, 5, rng);
  const Matrix x = oracle::random_matrix(5, 333, rng);
  const Matrix y = oracle::random_matrix(12, 333, rng);
  const Matrix g1 = gradient(a, x, y, Exec{1});
  for (unsigned t : {2u, 3u, 8u}) EXPECT_EQ(gradient(a, x, y, Exec{t}), g1);
}

// Duplicating every sample leaves the mean gradient unchanged.
TEST(GradientProperty, DuplicationInvariance) {
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t p = 1 + rng.next_u64() % 70;
    const Matrix a = dyadic(6, 3, rng);
    const Matrix x = dyadic(3, p, rng);
    const Matrix y = dyadic(6, p, rng);
    Matrix x2(3, 2 * p), y2(6, 2 * p);
    for (std::size_t c = 0; c < p; ++c)
      for (std::size_t d : {c, c + p}) {
        std::copy(x.col(c).begin(), x.col(c).end(), x2.col(d).begin());
        std::copy(y.col(c).begin(), y.col(c).end(), y2.col(d).begin());
      }
    EXPECT_EQ(gradient(a, x2, y2), gradient(a, x, y));
  }
}

TEST(GradientProperty, ZeroAtExactCodes) {
  Rng rng(34);
  const Matrix a = oracle::random_matrix(8, 3, rng);
  const Matrix x = dyadic(3, 40, rng);
  const Matrix g = gradient(a, x, matmul(a, x));
  for (double v : g.data()) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(StepAndNormalize, UnitColumns) {
  Rng rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = normalize_columns(oracle::random_matrix(9, 4, rng));
    const Matrix g = 0.1 * oracle::random_matrix(9, 4, rng);
    const Matrix next = step_and_normalize(a, g, 20.0);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(norm2(next.col(j)), 1.0, 1e-15);
  }
}

TEST(StepAndNormalize, CollapseAndShape) {
  const Matrix a = Matrix::identity(2);
  EXPECT_THROW(step_and_normalize(a, a, 1.0), CollapsedColumnError);
  EXPECT_THROW(step_and_normalize(a, Matrix(3, 2), 1.0), DimensionError);
}

TEST(DescentCorrelation, ExampleAndResolution) {
  const std::vector<double> g{1, 2}, a{1, 0}, as{0, 0};
  EXPECT_EQ(descent_correlation(g, a, as), 1.0);
  // Difference at rounding level against a gradient of size 1: reported 0.
  const std::vector<double> a2{1.0, 1e-17}, as2{1.0, 0.0}, g2{0.0, -1.0};
  EXPECT_LT(descent_correlation(g2, a2, as2), 0.0);
  EXPECT_EQ(resolved_descent_correlation(g2, a2, as2), 0.0);
  EXPECT_EQ(resolved_descent_correlation(g, a, as), 1.0);
  EXPECT_THROW(descent_correlation(g, std::vector<double>{1}, as), DimensionError);
}

TEST(SampleMode, Names) {
  EXPECT_EQ(to_string(SampleMode::IndependentOnly), "independent_only");
  EXPECT_EQ(to_string(SampleMode::AllNonzero), "all_nonzero");
}

}  // namespace
}  // namespace tnoodl
