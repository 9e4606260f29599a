#pragma once

// Recovery scores: column matching up to permutation and sign, column and
// Frobenius errors, signed-support agreement, incoherence, closeness and
// data fit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "tnoodl/error.hpp"
#include "tnoodl/linalg.hpp"

namespace tnoodl {

// Column j of the reference corresponds to signs[j] * A(:, perm[j]).
struct Alignment {
  std::vector<std::size_t> perm;
  std::vector<double> signs;
  std::vector<double> matched_scores;

  static Alignment identity(std::size_t m) {
    Alignment a;
    a.perm.resize(m);
    std::iota(a.perm.begin(), a.perm.end(), std::size_t{0});
    a.signs.assign(m, 1.0);
    a.matched_scores.assign(m, 0.0);
    return a;
  }
};

// Greedy matching on |<A_i, Aref_j>|: the largest remaining score is taken
// first; equal scores go to the lowest (j, i).
inline Alignment match_columns(const Matrix& a, const Matrix& a_ref) {
  require_same_shape(a, a_ref, "match_columns");
  const std::size_t m = a.cols();
  const Matrix corr = matmul_tn(a, a_ref);  // corr(i, j) = <A_i, Aref_j>

  struct Cand { double score; std::size_t j, i; };
  std::vector<Cand> cands;
  cands.reserve(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) cands.push_back({std::abs(corr(i, j)), j, i});
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.j != y.j) return x.j < y.j;
    return x.i < y.i;
  });

  Alignment out;
  out.perm.assign(m, 0);
  out.signs.assign(m, 1.0);
  out.matched_scores.assign(m, 0.0);
  std::vector<char> used_i(m, 0), used_j(m, 0);
  std::size_t matched = 0;
  for (const Cand& c : cands) {
    if (matched == m) break;
    if (used_i[c.i] || used_j[c.j]) continue;
    used_i[c.i] = used_j[c.j] = 1;
    out.perm[c.j] = c.i;
    out.signs[c.j] = corr(c.i, c.j) < 0.0 ? -1.0 : 1.0;
    out.matched_scores[c.j] = c.score;
    ++matched;
  }
  return out;
}

// Column j of the result is signs[j] * A(:, perm[j]).
inline Matrix apply_alignment(const Matrix& a, const Alignment& al) {
  Matrix out(a.rows(), al.perm.size());
  for (std::size_t j = 0; j < al.perm.size(); ++j) {
    auto src = a.col(al.perm[j]);
    auto dst = out.col(j);
    for (std::size_t i = 0; i < a.rows(); ++i) dst[i] = al.signs[j] * src[i];
  }
  return out;
}

// Row j of the result is signs[j] * X(perm[j], :).
inline Matrix apply_alignment_rows(const Matrix& x, const Alignment& al) {
  Matrix out(al.perm.size(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c)
    for (std::size_t j = 0; j < al.perm.size(); ++j) out(j, c) = al.signs[j] * x(al.perm[j], c);
  return out;
}

struct ColumnErrors {
  double max_err = 0.0;
  double mean_err = 0.0;
  std::vector<double> per_col;
};

inline ColumnErrors column_errors(const Matrix& a, const Matrix& a_ref, const Alignment& al) {
  require_same_shape(a, a_ref, "column_errors");
  ColumnErrors out;
  out.per_col.resize(a_ref.cols());
  std::vector<double> diff(a.rows());
  for (std::size_t j = 0; j < a_ref.cols(); ++j) {
    auto src = a.col(al.perm[j]);
    auto ref = a_ref.col(j);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = al.signs[j] * src[i] - ref[i];
    out.per_col[j] = norm2(diff);
    out.max_err = std::max(out.max_err, out.per_col[j]);
    out.mean_err += out.per_col[j];
  }
  if (!out.per_col.empty()) out.mean_err /= static_cast<double>(out.per_col.size());
  return out;
}

inline double rel_frobenius(const Matrix& m, const Matrix& m_ref) {
  require_same_shape(m, m_ref, "rel_frobenius");
  const double denom = frobenius_norm(m_ref);
  if (!(denom > 0.0)) throw NumericError("rel_frobenius: reference has zero norm");
  return frobenius_norm(m - m_ref) / denom;
}

inline bool signed_support_equal(const Matrix& x, const Matrix& x_ref) {
  require_same_shape(x, x_ref, "signed_support_equal");
  auto a = x.data();
  auto b = x_ref.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int sa = (a[i] > 0.0) - (a[i] < 0.0);
    const int sb = (b[i] > 0.0) - (b[i] < 0.0);
    if (sa != sb) return false;
  }
  return true;
}

// sqrt(n) * max_{i != j} |<A_i, A_j>|; zero for a single column.
inline double incoherence(const Matrix& a) {
  for (std::size_t j = 0; j < a.cols(); ++j)
    if (std::abs(norm2(a.col(j)) - 1.0) > 1e-8)
      throw NumericError(detail::concat("incoherence: column ", j, " is not unit norm"));
  double worst = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = j + 1; i < a.cols(); ++i)
      worst = std::max(worst, std::abs(dot(a.col(i), a.col(j))));
  return std::sqrt(static_cast<double>(a.rows())) * worst;
}

// Spectral closeness under the greedy alignment plus per-column eps bound.
inline bool closeness_check(const Matrix& a, const Matrix& a_ref, double eps, double kappa) {
  const Alignment al = match_columns(a, a_ref);
  const ColumnErrors errs = column_errors(a, a_ref, al);
  if (errs.max_err > eps) return false;
  const Matrix diff = apply_alignment(a, al) - a_ref;
  if (frobenius_norm(diff) == 0.0) return true;
  return spectral_norm(diff) <= kappa * spectral_norm(a_ref);
}

// |Y - A X|_F / |Y|_F
inline double data_fit(const Matrix& y, const Matrix& a, const Matrix& x) {
  const double denom = frobenius_norm(y);
  if (!(denom > 0.0)) throw NumericError("data_fit: Y has zero norm");
  return frobenius_norm(y - matmul(a, x)) / denom;
}

// Sparse-factor comparison. Column j of the estimate is est(:, perm[j]);
// both sides are scaled to unit norm, the sign is free, and an all-zero
// column only matches an all-zero reference (error 1 otherwise).
inline ColumnErrors normalized_factor_errors(const Matrix& est, const Matrix& ref,
                                             const Alignment& al) {
  if (est.rows() != ref.rows() || est.cols() != ref.cols() || al.perm.size() != ref.cols())
    throw DimensionError("normalized_factor_errors: shape mismatch");
  ColumnErrors out;
  out.per_col.resize(ref.cols());
  for (std::size_t j = 0; j < ref.cols(); ++j) {
    auto e = est.col(al.perm[j]);
    auto r = ref.col(j);
    const double ne = norm2(e), nr = norm2(r);
    double err = 0.0;
    if (ne == 0.0 || nr == 0.0) {
      err = (ne == 0.0 && nr == 0.0) ? 0.0 : 1.0;
    } else {
      double plus = 0.0, minus = 0.0;
      for (std::size_t i = 0; i < e.size(); ++i) {
        const double a = e[i] / ne, b = r[i] / nr;
        plus += (a - b) * (a - b);
        minus += (a + b) * (a + b);
      }
      err = std::sqrt(std::min(plus, minus));
    }
    out.per_col[j] = err;
    out.max_err = std::max(out.max_err, err);
    out.mean_err += err;
  }
  if (!out.per_col.empty()) out.mean_err /= static_cast<double>(out.per_col.size());
  return out;
}

}  // namespace tnoodl
