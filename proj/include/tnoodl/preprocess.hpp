#pragma once

// Count-data conditioning for ingested tensors.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tnoodl/error.hpp"
#include "tnoodl/tensor.hpp"

namespace tnoodl {

struct PreprocessOptions {
  bool log_compress = true;   // v -> log2(v) + 1 on non-zeros
  bool max_scale = false;     // divide by the largest magnitude
  bool center_fibers = false; // subtract each non-zero mode-1 fiber's mean
};

// Non-zeros map to log2(v) + 1; zeros stay zero. Non-zero entries below 1
// are rejected since they would map to non-positive values.
inline DenseTensor3 preprocess_dynamic_range(const DenseTensor3& z) {
  DenseTensor3 out = z;
  auto d = out.data();
  for (std::size_t idx = 0; idx < d.size(); ++idx) {
    if (d[idx] == 0.0) continue;
    if (d[idx] < 1.0)
      throw NumericError(detail::concat("preprocess_dynamic_range: entry ", d[idx],
                                        " at flat index ", idx, " is below 1"));
    d[idx] = std::log2(d[idx]) + 1.0;
  }
  return out;
}

inline DenseTensor3 scale_by_max(const DenseTensor3& z) {
  DenseTensor3 out = z;
  double peak = 0.0;
  for (double v : out.data()) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : out.data()) v /= peak;
  return out;
}

// All-zero fibers are left alone so they remain absent after centering.
inline DenseTensor3 center_fibers(const DenseTensor3& z) {
  DenseTensor3 out = z;
  for (std::size_t k = 0; k < z.K(); ++k)
    for (std::size_t j = 0; j < z.J(); ++j) {
      auto f = out.fiber(j, k);
      if (std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; })) continue;
      double mean = 0.0;
      for (double v : f) mean += v;
      mean /= static_cast<double>(f.size());
      for (double& v : f) v -= mean;
    }
  return out;
}

inline DenseTensor3 preprocess(const DenseTensor3& z, const PreprocessOptions& opt) {
  DenseTensor3 out = opt.log_compress ? preprocess_dynamic_range(z) : z;
  if (opt.max_scale) out = scale_by_max(out);
  if (opt.center_fibers) out = center_fibers(out);
  return out;
}

}  // namespace tnoodl
