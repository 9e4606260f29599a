#pragma once

// Recovers the sparse factors B and C from an estimate of the transposed
// Khatri-Rao matrix S: each row reshapes to a J x K matrix whose principal
// rank-1 term is sigma * u v^T, split as B_i = sqrt(sigma) u, C_i = sqrt(sigma) v.

#include <cmath>
#include <cstddef>
#include <vector>

#include "tnoodl/error.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/parallel.hpp"
#include "tnoodl/tensor.hpp"

namespace tnoodl {

struct UntangledFactors {
  Matrix B;
  Matrix C;
  std::vector<std::size_t> degenerate_rows;  // rows of S that were all zero
};

// M(j, k) = S(row, k*J + j)
inline Matrix reshape_row(const Matrix& s, std::size_t row, std::size_t J, std::size_t K) {
  Matrix m(J, K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j) m(j, k) = s(row, flat_index(j, k, J));
  return m;
}

inline UntangledFactors untangle_krp(const Matrix& shat, std::size_t J, std::size_t K,
                                     double svd_tol = kDefaultSvdTol, Exec exec = {}) {
  if (J == 0 || K == 0 || shat.cols() != J * K)
    throw DimensionError(detail::concat("untangle_krp: S has ", shat.cols(),
                                        " columns, expected J*K = ", J, "*", K));
  const std::size_t m = shat.rows();
  UntangledFactors out{Matrix(J, m), Matrix(K, m), {}};
  std::vector<char> degenerate(m, 0);

  parallel_for(m, exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      bool any = false;
      for (std::size_t l = 0; l < shat.cols() && !any; ++l) any = shat(i, l) != 0.0;
      if (!any) {
        degenerate[i] = 1;
        continue;
      }
      Rank1Svd svd;
      try {
        svd = rank1_svd(reshape_row(shat, i, J, K), svd_tol);
      } catch (const ConvergenceError& e) {
        throw ConvergenceError(detail::concat("untangle_krp: row ", i, ": ", e.what()),
                               e.residual());
      }
      const double scale = std::sqrt(svd.sigma1);
      auto bi = out.B.col(i);
      auto ci = out.C.col(i);
      for (std::size_t j = 0; j < J; ++j) bi[j] = scale * svd.u1[j];
      for (std::size_t k = 0; k < K; ++k) ci[k] = scale * svd.v1[k];
    }
  });

  for (std::size_t i = 0; i < m; ++i)
    if (degenerate[i]) out.degenerate_rows.push_back(i);
  return out;
}

}  // namespace tnoodl
