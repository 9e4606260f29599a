#pragma once

// Sparse code estimation: hard-thresholded correlation start followed by R
// iterative hard thresholding steps, solved column by column.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tnoodl/error.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/parallel.hpp"

namespace tnoodl {

struct IhtParams {
  double eta_x = 0.2;
  double tau = 0.1;
  std::size_t R = 50;
  double C_lb = 1.0;
  // Optional per-step overrides; entry r applies to step r, the last entry
  // is reused once the schedule runs out.
  std::vector<double> eta_x_schedule;
  std::vector<double> tau_schedule;

  double eta_at(std::size_t r) const {
    if (eta_x_schedule.empty()) return eta_x;
    return eta_x_schedule[std::min(r, eta_x_schedule.size() - 1)];
  }
  double tau_at(std::size_t r) const {
    if (tau_schedule.empty()) return tau;
    return tau_schedule[std::min(r, tau_schedule.size() - 1)];
  }

  void validate() const {
    auto check_eta = [](double e) {
      if (!(e > 0.0 && e <= 1.0)) throw ConfigError(detail::concat("eta_x must lie in (0, 1], got ", e));
    };
    auto check_tau = [](double t) {
      if (!(t > 0.0)) throw ConfigError(detail::concat("tau must be positive, got ", t));
    };
    check_eta(eta_x);
    check_tau(tau);
    for (double e : eta_x_schedule) check_eta(e);
    for (double t : tau_schedule) check_tau(t);
    if (!(C_lb > 0.0 && C_lb <= 1.0))
      throw ConfigError(detail::concat("C must lie in (0, 1], got ", C_lb));
  }
};

// Smallest R with (1 - eta_x)^R <= delta_R, never below 50.
inline std::size_t default_iht_steps(double eta_x, double delta_R = 1e-12) {
  if (eta_x >= 1.0) return 50;
  const double steps = std::ceil(std::log(1.0 / delta_R) / -std::log1p(-eta_x));
  return std::max<std::size_t>(50, static_cast<std::size_t>(steps));
}

// T_tau(z): keep entries with |z| >= tau.
inline std::vector<double> hard_threshold(std::span<const double> z, double tau) {
  std::vector<double> out(z.begin(), z.end());
  for (double& v : out)
    if (!(std::abs(v) >= tau)) v = 0.0;
  return out;
}

inline void hard_threshold_inplace(std::span<double> z, double tau) {
  for (double& v : z)
    if (!(std::abs(v) >= tau)) v = 0.0;
}

// X0 = T_{C/2}(A^T Y).
inline Matrix init_code(const Matrix& a, const Matrix& y, double C_lb) {
  if (!(C_lb > 0.0)) throw ConfigError("init_code: C must be positive");
  Matrix x = matmul_tn(a, y);
  hard_threshold_inplace(x.data(), C_lb / 2.0);
  return x;
}

// X^(r+1) = T_tau(X^(r) - eta_x A^T (A X^(r) - Y)), r = 0..R-1, per column.
// Uses the Gram form A^T A x - A^T y of the same gradient.
inline Matrix iht(const Matrix& a, const Matrix& y, const Matrix& x0, const IhtParams& params,
                  Exec exec = {}) {
  if (a.rows() != y.rows() || a.cols() != x0.rows() || y.cols() != x0.cols())
    throw DimensionError(detail::concat("iht: incompatible shapes A ", shape_str(a), ", Y ",
                                        shape_str(y), ", X0 ", shape_str(x0)));
  params.validate();
  Matrix x = x0;
  if (params.R == 0 || x.cols() == 0) return x;

  const std::size_t m = a.cols();
  const Matrix gram = matmul_tn(a, a);
  const Matrix aty = matmul_tn(a, y);

  parallel_for(x.cols(), exec, [&](std::size_t begin, std::size_t end) {
    std::vector<double> grad(m);
    for (std::size_t c = begin; c < end; ++c) {
      auto xc = x.col(c);
      auto bc = aty.col(c);
      for (std::size_t r = 0; r < params.R; ++r) {
        for (std::size_t i = 0; i < m; ++i) grad[i] = -bc[i];
        for (std::size_t k = 0; k < m; ++k) {
          const double xk = xc[k];
          if (xk == 0.0) continue;
          auto gk = gram.col(k);
          for (std::size_t i = 0; i < m; ++i) grad[i] += gk[i] * xk;
        }
        const double eta = params.eta_at(r);
        const double tau = params.tau_at(r);
        for (std::size_t i = 0; i < m; ++i) {
          const double v = xc[i] - eta * grad[i];
          if (!std::isfinite(v))
            throw NumericError(detail::concat("iht: non-finite code in column ", c,
                                              " at step ", r, " (step size too large?)"));
          xc[i] = std::abs(v) >= tau ? v : 0.0;
        }
      }
    }
  });
  return x;
}

}  // namespace tnoodl
