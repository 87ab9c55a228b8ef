#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siph/decomposition.hpp"
#include "siph/field.hpp"
#include "siph/ray_analysis.hpp"

namespace siph {

enum class RadiusStatus { found, unbounded, no_intersection };
const char* to_string(RadiusStatus s);

struct LevelRadius {
  RadiusStatus status = RadiusStatus::no_intersection;
  double radius = 0.0;    // meaningful when found
  double residual = 0.0;  // f(x★ + t*·d) - c
  Monotonicity ray = Monotonicity::constant;
};

/// t* ≥ 0 with f(x★ + t*·d) = c. Constant rays and rays whose bracket
/// reaches 2^60 without straddling c report `unbounded`; levels on the far
/// side of f(x★), or inside a jump of the ray, report `no_intersection`.
/// Throws std::invalid_argument for non-monotone rays.
LevelRadius ray_level_radius(const ScalarField& field, std::span<const double> d, double c,
                             std::optional<double> tol = std::nullopt,
                             const Vec& grid = uniform_grid(10.0, 64));

struct SphereExtrema {
  double m = 0.0, M = 0.0;
  Vec argmin, argmax;
  std::size_t evaluations = 0;
};

/// min/max of f(x★ + u) over the unit sphere: axes plus seeded samples, then
/// golden-section refinement along great-circle arcs from the 8 best points.
SphereExtrema sphere_extrema(const ScalarField& p, std::size_t n_samples, int refine_steps = 24,
                             std::uint64_t seed = 0);

struct BoundsWitness {
  Vec x;
  double value = 0.0;
  double bound = 0.0;
  std::string kind;  // lower, upper, inner_ball, outer_ball, nonpositive
};

struct BoundsReport {
  bool pass = true;
  bool precondition_failed = false;
  std::string note;
  double m_p = 0.0, M_p = 0.0;
  /// φ-images of the extrema (SI form) or equal to m_p, M_p (PH form).
  double m = 0.0, M = 0.0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::vector<BoundsWitness> witnesses;
};

/// ‖x‖·m_p^{1/α} ≤ p(x★+x)^{1/α} ≤ ‖x‖·M_p^{1/α}, relative tolerance 1e-9.
BoundsReport check_ph_sandwich(const ScalarField& p, double alpha, double m_p, double M_p,
                               const SamplingPlan& plan);

/// φ(m‖x‖) ≤ f(x) ≤ φ(M‖x‖) in the degree-1 normalization, plus the ball
/// inclusions {‖y‖ < ρ} ⊆ {f ≤ φ(ρM)} and {f ≤ f(x)} ⊆ {‖y‖ ≤ φ⁻¹(f(x))/m}.
/// Requires x★ to be the unique argmin (one-sided case, increasing rays).
BoundsReport check_si_sandwich(const ScalarField& field, const Decomposition& d,
                               const SamplingPlan& plan, std::size_t extrema_samples = 0);

enum class CompactnessVerdict { bounded, unbounded_evidence };
const char* to_string(CompactnessVerdict v);

struct CompactnessWitness {
  Vec direction;
  std::string reason;  // constant_ray, non_monotone_ray, decreasing_ray, unbounded_radius
};

struct CompactnessReport {
  CompactnessVerdict verdict = CompactnessVerdict::bounded;
  double level = 0.0;
  double max_radius = 0.0;
  std::vector<LevelRadius> radii;
  /// Ordered by reason (constant, non-monotone, decreasing, unbounded), then
  /// by direction index.
  std::vector<CompactnessWitness> witnesses;
};

CompactnessReport compactness_probe(const ScalarField& field, const std::vector<Vec>& directions,
                                    double c, const Vec& grid = uniform_grid(10.0, 64));

struct ShellFraction {
  double eps = 0.0;
  std::size_t hits = 0;
  double fraction = 0.0;
  double sigma = 0.0;  // binomial standard error
};

struct NegligibilityReport {
  bool pass = true;
  std::size_t samples = 0;
  double kappa = 10.0;
  std::vector<ShellFraction> shells;
  std::string note;
};

/// Fraction of uniform samples in x★ + [-R, R]^n with |f(x) - c| ≤ ε, for
/// each ε (strictly decreasing). Passes when the fractions never grow, the
/// last is below the first, and the last is at most κ·ε_last.
NegligibilityReport negligibility_probe(const ScalarField& field, double c, const Vec& eps_list,
                                        std::size_t samples, double box_radius, std::uint64_t seed,
                                        unsigned threads = 0, double kappa = 10.0);

}  // namespace siph
