#include "siph/random.hpp"

#include <cmath>
#include <numbers>

namespace siph {

std::uint64_t Rng::mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t chunk) {
  return Rng::mix(Rng::mix(seed ^ Rng::mix(stream)) + chunk);
}

Vec uniform_box(Rng& rng, std::size_t n, double radius) {
  Vec x(n);
  for (auto& v : x) v = rng.uniform(-radius, radius);
  return x;
}

Vec uniform_sphere(Rng& rng, std::size_t n) {
  Vec x(n);
  double norm2 = 0.0;
  while (norm2 < 1e-24) {
    norm2 = 0.0;
    for (auto& v : x) {
      v = rng.normal();
      norm2 += v * v;
    }
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& v : x) v *= inv;
  return x;
}

Vec uniform_ball(Rng& rng, std::size_t n, double radius) {
  Vec x = uniform_sphere(rng, n);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  for (auto& v : x) v *= r;
  return x;
}

}  // namespace siph
