#pragma once

// Three-way tensors and the reshapes that expose their CP structure.
//
// Flat column index of fiber (j, k) is l = k*J + j (0-based), i.e. the
// mode-1 unfolding is ordered in K blocks of J columns each. The same law
// gives the transposed Khatri-Rao matrix S(r, l) = C(k, r) * B(j, r).

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tnoodl/error.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/parallel.hpp"

namespace tnoodl {

class DenseTensor3 {
 public:
  DenseTensor3() = default;
  DenseTensor3(std::size_t n, std::size_t J, std::size_t K)
      : n_(n), J_(J), K_(K), values_(n * J * K, 0.0) {}

  DenseTensor3(std::size_t n, std::size_t J, std::size_t K, std::vector<double> values)
      : n_(n), J_(J), K_(K), values_(std::move(values)) {
    if (values_.size() != n_ * J_ * K_)
      throw DimensionError(detail::concat("DenseTensor3: ", values_.size(),
                                          " values for shape ", n_, "x", J_, "x", K_));
    for (double v : values_)
      if (!std::isfinite(v)) throw NumericError("DenseTensor3: non-finite value");
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t J() const noexcept { return J_; }
  std::size_t K() const noexcept { return K_; }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values_[(k * J_ + j) * n_ + i];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(k * J_ + j) * n_ + i];
  }

  // Mode-1 fiber Z(:, j, k), contiguous.
  std::span<const double> fiber(std::size_t j, std::size_t k) const {
    return {values_.data() + (k * J_ + j) * n_, n_};
  }
  std::span<double> fiber(std::size_t j, std::size_t k) {
    return {values_.data() + (k * J_ + j) * n_, n_};
  }

  std::span<const double> data() const noexcept { return values_; }
  std::span<double> data() noexcept { return values_; }

  friend bool operator==(const DenseTensor3&, const DenseTensor3&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t J_ = 0;
  std::size_t K_ = 0;
  std::vector<double> values_;
};

struct BlockCoord {
  std::size_t j = 0;
  std::size_t k = 0;
  friend bool operator==(const BlockCoord&, const BlockCoord&) = default;
};

// Provenance of the retained columns of an unfolding.
struct ColumnIndexMap {
  std::size_t J = 0;
  std::size_t K = 0;
  std::vector<std::size_t> kept;  // strictly increasing flat indices
  std::vector<BlockCoord> block_coords;

  std::size_t total_cols() const noexcept { return J * K; }
  std::size_t size() const noexcept { return kept.size(); }
};

inline BlockCoord block_coord(std::size_t flat, std::size_t J) {
  return {flat % J, flat / J};
}

inline std::size_t flat_index(std::size_t j, std::size_t k, std::size_t J) {
  return k * J + j;
}

// value(i,j,k) = sum_r A(i,r) B(j,r) C(k,r).
inline DenseTensor3 cp_compose(const Matrix& a, const Matrix& b, const Matrix& c,
                               Exec exec = {}) {
  const std::size_t m = a.cols();
  if (b.cols() != m || c.cols() != m)
    throw DimensionError(detail::concat("cp_compose: factor ranks differ (A ", shape_str(a),
                                        ", B ", shape_str(b), ", C ", shape_str(c), ")"));
  const std::size_t n = a.rows(), J = b.rows(), K = c.rows();
  DenseTensor3 z(n, J, K);
  parallel_for(J * K, exec, [&](std::size_t begin, std::size_t end) {
    std::vector<double> coef(m);
    for (std::size_t l = begin; l < end; ++l) {
      const auto [j, k] = block_coord(l, J);
      bool any = false;
      for (std::size_t r = 0; r < m; ++r) {
        coef[r] = b(j, r) * c(k, r);
        any = any || coef[r] != 0.0;
      }
      if (!any) continue;
      auto f = z.fiber(j, k);
      for (std::size_t r = 0; r < m; ++r) {
        if (coef[r] == 0.0) continue;
        auto ar = a.col(r);
        for (std::size_t i = 0; i < n; ++i) f[i] += ar[i] * coef[r];
      }
    }
  });
  return z;
}

// Z_1^T: n rows, column k*J + j holds fiber Z(:, j, k).
inline Matrix mode1_unfold(const DenseTensor3& z) {
  return Matrix(z.n(), z.J() * z.K(), std::vector<double>(z.data().begin(), z.data().end()));
}

// S = (C ⊙ B)^T, m x JK with S(r, k*J + j) = C(k, r) * B(j, r).
inline Matrix khatri_rao_transpose(const Matrix& b, const Matrix& c) {
  const std::size_t m = b.cols();
  if (c.cols() != m)
    throw DimensionError(detail::concat("khatri_rao_transpose: column counts differ (B ",
                                        shape_str(b), ", C ", shape_str(c), ")"));
  const std::size_t J = b.rows(), K = c.rows();
  Matrix s(m, J * K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j) {
      auto col = s.col(flat_index(j, k, J));
      for (std::size_t r = 0; r < m; ++r) col[r] = c(k, r) * b(j, r);
    }
  return s;
}

struct ExtractedColumns {
  Matrix Y;
  ColumnIndexMap map;
};

// Keeps columns with max |entry| > zero_tol, in ascending flat order.
// `J` fixes the block law used for the recorded (j, k) coordinates.
inline ExtractedColumns extract_nonzero_columns(const Matrix& z1t, std::size_t J,
                                                double zero_tol = 0.0) {
  if (zero_tol < 0.0) throw Error("extract_nonzero_columns: zero_tol must be >= 0");
  if (J == 0 || z1t.cols() % J != 0)
    throw DimensionError(detail::concat("extract_nonzero_columns: ", z1t.cols(),
                                        " columns is not a multiple of J = ", J));
  ExtractedColumns out;
  out.map.J = J;
  out.map.K = z1t.cols() / J;
  for (std::size_t l = 0; l < z1t.cols(); ++l) {
    double peak = 0.0;
    for (double v : z1t.col(l)) peak = std::max(peak, std::abs(v));
    if (peak > zero_tol) {
      out.map.kept.push_back(l);
      out.map.block_coords.push_back(block_coord(l, J));
    }
  }
  out.Y = Matrix(z1t.rows(), out.map.kept.size());
  for (std::size_t c = 0; c < out.map.kept.size(); ++c) {
    auto src = z1t.col(out.map.kept[c]);
    std::copy(src.begin(), src.end(), out.Y.col(c).begin());
  }
  return out;
}

// Inverse of the extraction: zeros everywhere except the kept columns.
inline Matrix scatter_columns(const Matrix& xhat, const ColumnIndexMap& map) {
  if (xhat.cols() != map.size())
    throw DimensionError(detail::concat("scatter_columns: ", xhat.cols(),
                                        " columns but map keeps ", map.size()));
  Matrix s(xhat.rows(), map.total_cols());
  for (std::size_t c = 0; c < map.size(); ++c) {
    auto src = xhat.col(c);
    std::copy(src.begin(), src.end(), s.col(map.kept[c]).begin());
  }
  return s;
}

// One column per block: the k-th column of block k, for k < min(J, K).
// Entries at these positions touch distinct rows of B and of C.
inline std::vector<std::size_t> independent_column_indices(std::size_t J, std::size_t K) {
  if (J == 0 || K == 0) throw DimensionError("independent_column_indices: J and K must be >= 1");
  const std::size_t L = std::min(J, K);
  std::vector<std::size_t> idx(L);
  for (std::size_t k = 0; k < L; ++k) idx[k] = flat_index(k, k, J);
  return idx;
}

}  // namespace tnoodl
