#pragma once

// Dictionary update: empirical gradient over the selected sample columns,
// a descent step, and column renormalization.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "tnoodl/error.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/parallel.hpp"

namespace tnoodl {

enum class SampleMode { IndependentOnly, AllNonzero };

inline std::string_view to_string(SampleMode mode) {
  return mode == SampleMode::IndependentOnly ? "independent_only" : "all_nonzero";
}

struct DictStepParams {
  double eta_A = 20.0;
  SampleMode sample_mode = SampleMode::AllNonzero;
};

// Step sizes by rank: 50 -> 20 (5 at alpha = beta = 0.005), 150 -> 40,
// 300 -> 40, 450 -> 50, 600 -> 50. Other ranks take the nearest listed one.
inline double default_eta_A(std::size_t m, double alpha, double beta) {
  struct Row { std::size_t m; double eta; };
  static constexpr Row kTable[] = {{50, 20.0}, {150, 40.0}, {300, 40.0}, {450, 50.0}, {600, 50.0}};
  const Row* best = &kTable[0];
  for (const Row& row : kTable) {
    const auto dist = [m](std::size_t r) { return r > m ? r - m : m - r; };
    if (dist(row.m) < dist(best->m)) best = &row;
  }
  if (best->m == 50 && alpha <= 0.005 && beta <= 0.005) return 5.0;
  return best->eta;
}

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

namespace detail {

// Samples per partial sum. Fixed so the reduction tree does not depend on
// the worker count.
inline constexpr std::size_t kGradientBlock = 32;

}  // namespace detail

// g = (1/p) (A X - Y) sign(X)^T with sign(0) = 0. Partial sums over fixed
// blocks of columns are combined pairwise in a fixed order.
inline Matrix gradient(const Matrix& a, const Matrix& xsel, const Matrix& ysel, Exec exec = {}) {
  if (xsel.cols() == 0) throw Error("gradient: no sample columns");
  if (a.cols() != xsel.rows() || a.rows() != ysel.rows() || xsel.cols() != ysel.cols())
    throw DimensionError(detail::concat("gradient: incompatible shapes A ", shape_str(a),
                                        ", X ", shape_str(xsel), ", Y ", shape_str(ysel)));
  const std::size_t n = a.rows(), m = a.cols(), p = xsel.cols();
  const std::size_t blocks = (p + detail::kGradientBlock - 1) / detail::kGradientBlock;
  std::vector<Matrix> partial(blocks);

  parallel_for(blocks, exec, [&](std::size_t begin, std::size_t end) {
    std::vector<double> resid(n);
    for (std::size_t blk = begin; blk < end; ++blk) {
      Matrix acc(n, m);
      const std::size_t c_end = std::min(p, (blk + 1) * detail::kGradientBlock);
      for (std::size_t c = blk * detail::kGradientBlock; c < c_end; ++c) {
        auto xc = xsel.col(c);
        auto yc = ysel.col(c);
        for (std::size_t i = 0; i < n; ++i) resid[i] = -yc[i];
        for (std::size_t k = 0; k < m; ++k) {
          if (xc[k] == 0.0) continue;
          auto ak = a.col(k);
          for (std::size_t i = 0; i < n; ++i) resid[i] += ak[i] * xc[k];
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double s = sign_of(xc[k]);
          if (s == 0.0) continue;
          auto gk = acc.col(k);
          for (std::size_t i = 0; i < n; ++i) gk[i] += s * resid[i];
        }
      }
      partial[blk] = std::move(acc);
    }
  });

  for (std::size_t stride = 1; stride < blocks; stride *= 2)
    for (std::size_t b = 0; b + stride < blocks; b += 2 * stride) {
      auto dst = partial[b].data();
      auto src = partial[b + stride].data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }

  Matrix g = std::move(partial[0]);
  const double inv_p = 1.0 / static_cast<double>(p);
  for (double& v : g.data()) v *= inv_p;
  return g;
}

// normalize_columns(A - eta_A g).
inline Matrix step_and_normalize(const Matrix& a, const Matrix& g, double eta_A) {
  require_same_shape(a, g, "step_and_normalize");
  Matrix next = a;
  auto nd = next.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < nd.size(); ++i) nd[i] -= eta_A * gd[i];
  return normalize_columns(next);
}

// <g_i, A_i - A*_i>
inline double descent_correlation(std::span<const double> g_i, std::span<const double> a_i,
                                  std::span<const double> a_star_i) {
  if (g_i.size() != a_i.size() || a_i.size() != a_star_i.size())
    throw DimensionError("descent_correlation: vector lengths differ");
  double s = 0.0;
  for (std::size_t k = 0; k < g_i.size(); ++k) s += g_i[k] * (a_i[k] - a_star_i[k]);
  return s;
}

// descent_correlation with values inside the floating-point resolution of
// the inputs, eps * (sqrt(n) |A_i - A*_i| + |g_i|), reported as exactly 0.
// Atoms already converged to rounding level otherwise produce sign noise.
inline double resolved_descent_correlation(std::span<const double> g_i,
                                           std::span<const double> a_i,
                                           std::span<const double> a_star_i) {
  const double corr = descent_correlation(g_i, a_i, a_star_i);
  std::vector<double> d(a_i.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = a_i[k] - a_star_i[k];
  const double eps = std::numeric_limits<double>::epsilon();
  const double resolution =
      eps * (std::sqrt(static_cast<double>(d.size())) * norm2(d) + norm2(g_i));
  return std::abs(corr) <= resolution ? 0.0 : corr;
}

}  // namespace tnoodl
