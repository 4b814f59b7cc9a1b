#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "sgm/errors.hpp"

namespace sgm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream keyed by (seed, stream id). The same key
/// always reproduces the same sample sequence, and streams derived with
/// distinct ids are decorrelated, so work split across streams is
/// reproducible regardless of scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed),
        stream_(stream),
        engine_(splitmix64(splitmix64(seed) ^ ~splitmix64(stream))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Child stream for an independent unit of work (graph index, cell id, ...).
  RngStream derive(std::uint64_t substream) const {
    return RngStream(seed_, splitmix64(stream_ + 0x9e3779b97f4a7c15ULL * (substream + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe to feed into log().
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection keeps the draw exactly uniform.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw DomainError("uniform_index: n must be positive");
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via the Marsaglia polar method (second value cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Gamma(shape, 1) via Marsaglia-Tsang squeeze; exact for all shape > 0.
inline double sample_gamma(double shape, RngStream& rng) {
  if (!(shape > 0.0)) throw DomainError("sample_gamma: shape must be positive");
  if (shape < 1.0) {
    // boost to shape+1 and scale back
    const double u = rng.uniform_pos();
    return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline double sample_beta(double alpha, double beta, RngStream& rng) {
  const double a = sample_gamma(alpha, rng);
  const double b = sample_gamma(beta, rng);
  return a / (a + b);
}

}  // namespace sgm
