#pragma once

// Dense column-major matrices and the handful of kernels the solver needs:
// products, norms, column normalization and a rank-1 SVD by power
// iteration. Indices are 0-based throughout the C++ API.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "tnoodl/error.hpp"

namespace tnoodl {

class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  // `values` is column-major; every entry must be finite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_)
      throw DimensionError(detail::concat("Matrix: ", values_.size(),
                                          " values for shape ", rows_, "x",
                                          cols_));
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw NumericError(detail::concat("Matrix: non-finite value at flat index ", i));
  }

  // Row-major nested list, for literals in code and tests.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("Matrix::from_rows: ragged rows");
      std::size_t j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    m.check_finite();
    return m;
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diag(std::initializer_list<double> d) {
    Matrix m(d.size(), d.size());
    std::size_t i = 0;
    for (double v : d) { m(i, i) = v; ++i; }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {values_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const {
    return {values_.data() + j * rows_, rows_};
  }

  std::span<const double> data() const noexcept { return values_; }
  std::span<double> data() noexcept { return values_; }

  void check_finite() const {
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < rows_; ++i)
        if (!std::isfinite((*this)(i, j)))
          throw NumericError(detail::concat("non-finite value at (", i, ", ", j, ")"));
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline std::string shape_str(const Matrix& m) {
  return detail::concat(m.rows(), "x", m.cols());
}

// ---------------------------------------------------------------------------
// Vector helpers

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) {
  // Scaled accumulation so tiny and huge entries survive squaring.
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : a) {
    const double r = v / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Products and elementwise arithmetic

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw DimensionError(detail::concat("matmul: inner dimensions differ (",
                                        shape_str(a), " * ", shape_str(b), ")"));
  Matrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto cj = c.col(j);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      auto ak = a.col(k);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
    }
  }
  return c;
}

// a^T * b without forming the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw DimensionError(detail::concat("matmul_tn: row counts differ (",
                                        shape_str(a), "^T * ", shape_str(b), ")"));
  Matrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) c(i, j) = dot(a.col(i), b.col(j));
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(detail::concat(op, ": shapes differ (", shape_str(a),
                                        " vs ", shape_str(b), ")"));
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

inline Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

inline double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

inline Matrix outer(std::span<const double> u, std::span<const double> v) {
  Matrix m(u.size(), v.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    for (std::size_t i = 0; i < u.size(); ++i) m(i, j) = u[i] * v[j];
  return m;
}

// ---------------------------------------------------------------------------
// Column normalization

inline constexpr double kMinColumnNorm = 1e-300;

inline Matrix normalize_columns(const Matrix& a) {
  Matrix out = a;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double nrm = norm2(a.col(j));
    if (!(nrm >= kMinColumnNorm))
      throw CollapsedColumnError(
          detail::concat("normalize_columns: column ", j, " has norm ", nrm), j);
    for (double& v : out.col(j)) v /= nrm;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rank-1 SVD

struct Rank1Svd {
  double sigma1 = 0.0;
  std::vector<double> u1;
  std::vector<double> v1;
};

inline constexpr double kDefaultSvdTol = 1e-12;
inline constexpr std::size_t kDefaultSvdMaxIter = 10000;

namespace detail {

inline void matvec(const Matrix& m, std::span<const double> v, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double vj = v[j];
    if (vj == 0.0) continue;
    auto mj = m.col(j);
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] += mj[i] * vj;
  }
}

inline void matvec_t(const Matrix& m, std::span<const double> u, std::span<double> out) {
  for (std::size_t j = 0; j < m.cols(); ++j) out[j] = dot(m.col(j), u);
}

inline double residual_norm(std::span<const double> a, double s, std::span<const double> b) {
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) scale = std::max(scale, std::abs(a[i] - s * b[i]));
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = (a[i] - s * b[i]) / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

// Deterministic start: normalized column norms; falls back to the basis
// vector of the heaviest column if that start is annihilated by m.
inline std::vector<double> power_start(const Matrix& m) {
  std::vector<double> v(m.cols());
  std::size_t heaviest = 0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    v[j] = norm2(m.col(j));
    if (v[j] > v[heaviest]) heaviest = j;
  }
  const double nv = norm2(v);
  if (nv == 0.0) return {};
  for (double& x : v) x /= nv;
  std::vector<double> w(m.rows());
  matvec(m, v, w);
  if (norm2(w) == 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    v[heaviest] = 1.0;
  }
  return v;
}

}  // namespace detail

// Principal singular triplet by alternating power iteration
// u <- Mv/|Mv|, v <- M^T u/|M^T u|. Returns when both
// |Mv - s u| and |M^T u - s v| are within tol*max(1, s).
// The zero matrix yields s = 0, u = e1, v = e1. The largest-magnitude
// entry of u (lowest index on ties) is made nonnegative.
inline Rank1Svd rank1_svd(const Matrix& m, double tol = kDefaultSvdTol,
                          std::size_t max_iter = kDefaultSvdMaxIter) {
  if (m.empty()) throw DimensionError("rank1_svd: empty matrix");
  if (!(tol > 0.0)) throw Error("rank1_svd: tol must be positive");
  if (max_iter < 1) throw Error("rank1_svd: max_iter must be >= 1");

  Rank1Svd out;
  out.u1.assign(m.rows(), 0.0);
  out.v1 = detail::power_start(m);
  if (out.v1.empty()) {
    out.v1.assign(m.cols(), 0.0);
    out.u1[0] = 1.0;
    out.v1[0] = 1.0;
    return out;
  }

  std::vector<double> w(m.rows()), z(m.cols()), mtu(m.cols());
  detail::matvec(m, out.v1, w);
  double residual = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double nw = norm2(w);
    for (std::size_t i = 0; i < w.size(); ++i) out.u1[i] = w[i] / nw;
    detail::matvec_t(m, out.u1, z);
    const double sigma = norm2(z);
    out.sigma1 = sigma;
    for (std::size_t j = 0; j < z.size(); ++j) out.v1[j] = z[j] / sigma;
    detail::matvec(m, out.v1, w);
    detail::matvec_t(m, out.u1, mtu);
    const double r_left = detail::residual_norm(w, sigma, out.u1);
    const double r_right = detail::residual_norm(mtu, sigma, out.v1);
    residual = std::max(r_left, r_right);
    if (residual <= tol * std::max(1.0, sigma)) {
      std::size_t lead = 0;
      for (std::size_t i = 1; i < out.u1.size(); ++i)
        if (std::abs(out.u1[i]) > std::abs(out.u1[lead])) lead = i;
      if (out.u1[lead] < 0.0) {
        for (double& x : out.u1) x = -x;
        for (double& x : out.v1) x = -x;
      }
      return out;
    }
  }
  throw ConvergenceError(
      detail::concat("rank1_svd: no convergence after ", max_iter,
                     " iterations (residual ", residual, ")"),
      residual);
}

// Largest singular value via power iteration on M^T M; stops once the
// estimate changes by at most tol relative.
inline double spectral_norm(const Matrix& m, double tol = kDefaultSvdTol,
                            std::size_t max_iter = kDefaultSvdMaxIter) {
  if (m.empty()) throw DimensionError("spectral_norm: empty matrix");
  if (!(tol > 0.0)) throw Error("spectral_norm: tol must be positive");
  std::vector<double> v = detail::power_start(m);
  if (v.empty()) return 0.0;
  std::vector<double> w(m.rows()), z(m.cols());
  double prev = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    detail::matvec(m, v, w);
    const double sigma = norm2(w);
    if (it > 0 && std::abs(sigma - prev) <= tol * sigma) return sigma;
    prev = sigma;
    detail::matvec_t(m, w, z);
    const double nz = norm2(z);
    if (nz == 0.0) return sigma;
    for (std::size_t j = 0; j < z.size(); ++j) v[j] = z[j] / nz;
  }
  throw ConvergenceError(
      detail::concat("spectral_norm: no convergence after ", max_iter, " iterations"),
      prev);
}

}  // namespace tnoodl
