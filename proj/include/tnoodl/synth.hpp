#pragma once

// Synthetic instances: Gaussian incoherent dictionaries, Bernoulli-sparse
// factors with Rademacher or bounded sub-Gaussian non-zeros, and a
// closed-form perturbation of the dictionary at an exact column distance.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "tnoodl/error.hpp"
#include "tnoodl/linalg.hpp"
#include "tnoodl/rng.hpp"
#include "tnoodl/tensor.hpp"

namespace tnoodl {

enum class FactorDist { Rademacher, BoundedSubGaussian };

inline std::string_view to_string(FactorDist d) {
  return d == FactorDist::Rademacher ? "rademacher" : "subgaussian";
}

struct SparsityParams {
  double alpha = 0.01;
  double beta = 0.01;
  double gamma() const noexcept { return alpha * beta; }
  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
      throw ConfigError(detail::concat("alpha and beta must lie in (0, 1), got ", alpha,
                                       " and ", beta));
  }
};

struct Dims {
  std::size_t n = 0, J = 0, K = 0, m = 0;
};

struct GroundTruth {
  Matrix A_star;
  Matrix B_star;
  Matrix C_star;

  Matrix S_star() const { return khatri_rao_transpose(B_star, C_star); }
};

struct TensorInstance {
  DenseTensor3 tensor;
  GroundTruth truth;
};

// Default column perturbation 2/log(n).
inline double default_eps0(std::size_t n) { return 2.0 / std::log(static_cast<double>(n)); }

// Columns of i.i.d. N(0,1) entries scaled to unit norm. Column j draws from
// its own child stream.
inline Matrix gen_dictionary(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n == 0 || m == 0) throw DimensionError("gen_dictionary: n and m must be >= 1");
  Matrix a(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng(seed, StreamTag::Dictionary, j);
    auto col = a.col(j);
    double nrm = 0.0;
    while (!(nrm >= kMinColumnNorm)) {
      for (double& v : col) v = rng.normal();
      nrm = norm2(col);
    }
    for (double& v : col) v /= nrm;
  }
  return a;
}

// Upper end b of the non-zero magnitude law U[C, b], chosen so that
// E[v^2] = (b^3 - C^3) / (3 (b - C)) = b^2 + bC + C^2 over 3 equals 1,
// i.e. b = (sqrt(12 - 3 C^2) - C) / 2. At C = 1 this collapses to b = 1.
inline double subgaussian_upper(double C_lb) {
  return 0.5 * (std::sqrt(12.0 - 3.0 * C_lb * C_lb) - C_lb);
}

inline Matrix gen_sparse_factor(std::size_t dim, std::size_t m, double prob, FactorDist dist,
                                double C_lb, std::uint64_t seed,
                                StreamTag tag = StreamTag::FactorB) {
  if (!(prob > 0.0 && prob < 1.0))
    throw ConfigError(detail::concat("gen_sparse_factor: probability must lie in (0, 1), got ", prob));
  if (!(C_lb > 0.0 && C_lb <= 1.0))
    throw ConfigError(detail::concat("gen_sparse_factor: C must lie in (0, 1], got ", C_lb));
  const double upper = subgaussian_upper(C_lb);
  Matrix f(dim, m);
  for (std::size_t r = 0; r < m; ++r) {
    Rng rng(seed, tag, r);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!rng.bernoulli(prob)) continue;
      const double sign = rng.rademacher();
      f(i, r) = dist == FactorDist::Rademacher ? sign : sign * rng.uniform(C_lb, upper);
    }
  }
  return f;
}

// Rotates each column of A* by the angle whose chord is eps0, toward a
// random direction orthogonal to it: |A0_i| = 1 and |A0_i - A*_i| = eps0.
inline Matrix perturb_init(const Matrix& a_star, double eps0, std::uint64_t seed) {
  if (!(eps0 >= 0.0 && eps0 < 2.0))
    throw ConfigError(detail::concat("perturb_init: eps0 must lie in [0, 2), got ", eps0));
  const std::size_t n = a_star.rows();
  const double theta = 2.0 * std::asin(eps0 / 2.0);
  const double c = std::cos(theta), s = std::sin(theta);
  Matrix a0(n, a_star.cols());
  std::vector<double> w(n);
  for (std::size_t j = 0; j < a_star.cols(); ++j) {
    auto aj = a_star.col(j);
    Rng rng(seed, StreamTag::Perturbation, j);
    double nw = 0.0;
    while (!(nw > 1e-8)) {
      for (double& v : w) v = rng.normal();
      const double proj = dot(w, aj);
      for (std::size_t i = 0; i < n; ++i) w[i] -= proj * aj[i];
      nw = norm2(w);
    }
    auto out = a0.col(j);
    for (std::size_t i = 0; i < n; ++i) out[i] = c * aj[i] + s * (w[i] / nw);
  }
  return a0;
}

// Fresh B*, C* for one observation and the tensor they compose with A*.
inline TensorInstance gen_tensor_instance(const Dims& dims, const SparsityParams& sp,
                                          FactorDist dist, double C_lb, const Matrix& a_star,
                                          std::uint64_t seed, Exec exec = {}) {
  if (a_star.rows() != dims.n || a_star.cols() != dims.m)
    throw DimensionError(detail::concat("gen_tensor_instance: A* is ", shape_str(a_star),
                                        ", expected ", dims.n, "x", dims.m));
  sp.validate();
  TensorInstance inst;
  inst.truth.A_star = a_star;
  inst.truth.B_star = gen_sparse_factor(dims.J, dims.m, sp.alpha, dist, C_lb, seed, StreamTag::FactorB);
  inst.truth.C_star = gen_sparse_factor(dims.K, dims.m, sp.beta, dist, C_lb, seed, StreamTag::FactorC);
  inst.tensor = cp_compose(a_star, inst.truth.B_star, inst.truth.C_star, exec);
  return inst;
}

}  // namespace tnoodl
