#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "siph/field.hpp"

namespace siph {

/// k uniformly spaced points T/k, 2T/k, ..., T.
Vec uniform_grid(double T, std::size_t k);

struct SamplingPlan {
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
  /// Offsets x - x★ are drawn uniformly from [-R, R]^n.
  double box_radius = 1.0;
  /// ρ is log-uniform on [rho_min, rho_max].
  double rho_min = 0.5;
  double rho_max = 2.0;
  Vec grid = uniform_grid(10.0, 64);
  /// 0 means one worker per hardware thread. Results never depend on it.
  unsigned threads = 0;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct SIWitness {
  Vec x, y;
  double rho = 0.0;
  double fx = 0.0, fy = 0.0, frx = 0.0, fry = 0.0;
  std::string reason;  // "order_flip" or "non_finite"
};

struct SIReport {
  bool pass = true;
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::vector<SIWitness> witnesses;  // first kMaxWitnesses in probe order
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxWitnesses = 32;

/// Tests f(x★+x) ≤ f(x★+y) ⟺ f(x★+ρx) ≤ f(x★+ρy). Axis-symmetric pairs
/// (a·e_i, -a·e_i) are probed first, then plan.samples random triples.
SIReport check_scaling_invariance(const ScalarField& field, const SamplingPlan& plan);

/// Three-way comparison with values closer than 1e-12·(1+max|.|) treated as equal.
int compare_with_band(double a, double b);

enum class Monotonicity { constant, increasing, decreasing, non_monotone };
const char* to_string(Monotonicity m);

struct MonotoneVerdict {
  Monotonicity kind = Monotonicity::constant;
  double max_constancy_deviation = 0.0;
  /// Grid pair (t_a, t_b) exhibiting the failure, present iff non-monotone.
  std::optional<std::pair<double, double>> witness;
  /// Leading run of steps below the strictness tolerance ends here.
  std::optional<double> flat_until;
  /// Trailing run of steps below the strictness tolerance starts here.
  std::optional<double> saturated_from;
  /// Index range [strict_begin, strict_end] of t where steps are strict.
  std::size_t strict_begin = 0, strict_end = 0;
  Vec t;       // 0 followed by the grid
  Vec values;  // f(x★ + t·x)
};

/// Classifies t ↦ f(x★+t·x) on {0} ∪ grid. Steps smaller than 1e-10 count as
/// flat; flat runs are tolerated only at the start (high-order contact at x★)
/// and at the end (floating-point saturation).
MonotoneVerdict classify_ray(const ScalarField& field, std::span<const double> x, const Vec& grid);

/// ±e_i for every axis, then 2n seeded points on the unit sphere.
std::vector<Vec> default_directions(std::size_t n, std::uint64_t seed);

enum class DecomposabilityVerdict { decomposable, not_decomposable, inconclusive };
const char* to_string(DecomposabilityVerdict v);

struct DecomposabilityWitness {
  /// "non_monotone", "disjoint_image", "scale_inconsistent" or "unresolved".
  std::string kind;
  std::size_t ray_a = 0, ray_b = 0;
  Vec dir_a, dir_b;
  /// Value ranges of the two rays over the grid (t > 0).
  double lo_a = 0.0, hi_a = 0.0, lo_b = 0.0, hi_b = 0.0;
  std::optional<std::pair<double, double>> t_pair;
  std::string detail;
};

struct DecomposabilityReport {
  DecomposabilityVerdict verdict = DecomposabilityVerdict::inconclusive;
  double scale = 0.0;  // largest grid t
  std::size_t increasing = 0, decreasing = 0, constant = 0, non_monotone = 0;
  std::vector<MonotoneVerdict> rays;
  std::vector<DecomposabilityWitness> witnesses;
  std::string note;
};

/// Finite-scale version of the image-sharing criterion: every ray is constant
/// or strictly monotone, and rays of equal monotonicity are rescalings of one
/// another (f(x★+t·b) = f(x★+c·t·a) for a single c > 0), which in particular
/// requires overlapping value ranges.
DecomposabilityReport check_decomposability(const ScalarField& field, const std::vector<Vec>& directions,
                                            const Vec& grid);

}  // namespace siph
