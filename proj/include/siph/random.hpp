#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace siph {

using Vec = std::vector<double>;

// Seeded generator with platform-independent derived distributions.
// std::uniform_real_distribution and friends are implementation-defined, so
// every probe draws through these helpers to keep reports reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// log-uniform on [lo, hi], lo > 0.
  double log_uniform(double lo, double hi);
  /// Standard normal via Box-Muller (no cached second variate).
  double normal();

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
};

/// Seed for chunk `chunk` of stream `stream` derived from a user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk);

Vec uniform_box(Rng& rng, std::size_t n, double radius);
/// Normalized standard-normal vector: uniform on the unit sphere.
Vec uniform_sphere(Rng& rng, std::size_t n);
Vec uniform_ball(Rng& rng, std::size_t n, double radius);

}  // namespace siph
