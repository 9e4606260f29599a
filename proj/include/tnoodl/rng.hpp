#pragma once

// Portable random streams. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the uniform and normal transforms are
// written out here because the standard distributions are
// implementation-defined. Child streams are keyed by (seed, tag, index)
// through SplitMix64, so generation can be split per column.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tnoodl {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags, one per generator, so streams never overlap across roles.
enum class StreamTag : std::uint64_t {
  Dictionary = 1,
  Perturbation = 2,
  FactorB = 3,
  FactorC = 4,
  Instance = 5,
  Test = 99,
};

inline std::uint64_t child_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  return splitmix64(h ^ splitmix64(index));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, StreamTag tag, std::uint64_t index)
      : engine_(child_seed(seed, tag, index)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

  // Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tnoodl
