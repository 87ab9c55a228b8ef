#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "siph/field.hpp"
#include "siph/ray_analysis.hpp"
#include "siph/roots.hpp"

namespace siph {

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DecompositionCase { zero, one_sided, two_sided, explicit_parts };
const char* to_string(DecompositionCase c);

/// Sign convention for p in the one-sided case with decreasing rays.
/// `increasing` negates p so that φ is always strictly increasing;
/// `positive_p` keeps p ≥ 0 and lets φ decrease.
enum class Orientation { increasing, positive_p };

struct DecompositionOptions {
  double alpha = 1.0;
  /// Directions (offsets from x★). x0 forces the one-sided case; x_pos and
  /// x_neg together force the two-sided case.
  std::optional<Vec> x0, x_pos, x_neg;
  Orientation orientation = Orientation::increasing;
  BracketOptions bracket;
  std::uint64_t seed = 0;
};

/// f = φ∘p with p positively homogeneous of degree α about x★.
///
/// p works on absolute coordinates; φ and φ⁻¹ work on values relative to
/// f(x★), so φ(0) = 0. Copies share the λ cache.
class Decomposition {
 public:
  DecompositionCase kind() const;
  double alpha() const;
  Orientation orientation() const;
  std::size_t dim() const;
  const Vec& reference() const;
  double reference_value() const;
  const std::optional<Vec>& x0() const;
  const std::optional<Vec>& x_pos() const;
  const std::optional<Vec>& x_neg() const;
  double zero_tolerance() const;

  /// λ > 0 with f(x★ + λ(x - x★)) equal to the matching reference value;
  /// nullopt on the zero level or when bracketing fails.
  std::optional<double> lambda(std::span<const double> x) const;
  /// p(x); NaN when the ray root cannot be bracketed.
  double p(std::span<const double> x) const;
  /// φ(t) - f(x★) convention: φ(0) = 0. Throws DecompositionError when t
  /// lies on a side of 0 the case does not cover.
  double phi(double t) const;
  /// Inverse of phi. Throws DecompositionError outside the achieved range.
  double phi_inverse(double y) const;

  /// p as a field, tagged PH with degree α.
  ScalarField p_field() const;

  static Decomposition from_parts(ScalarField p, std::function<double(double)> phi_absolute,
                                  double alpha, double reference_value);

  struct Impl;

 private:
  explicit Decomposition(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;
  friend Decomposition build_decomposition(const ScalarField&, const DecompositionOptions&);
};

Decomposition build_decomposition(const ScalarField& field, const DecompositionOptions& opts = {});

struct DecompositionResiduals {
  std::size_t samples = 0;
  /// max |f(x) - f(x★) - φ(p(x))|
  double max_value_residual = 0.0;
  /// max |p(ρx) - ρ^α p(x)| and the same divided by 1 + ρ^α|p(x)|
  double max_ph_residual = 0.0;
  double max_ph_residual_normalized = 0.0;
  /// Samples where p could not be evaluated.
  std::size_t failures = 0;
  Vec worst_value_point, worst_ph_point;
  double worst_ph_rho = 0.0;
};

DecompositionResiduals verify_decomposition(const ScalarField& field, const Decomposition& d,
                                            const SamplingPlan& plan);

struct RatioClass {
  std::string label;  // "positive" or "negative"
  std::size_t count = 0;
  double mean = 0.0;
  double cv = 0.0;
  double min = 0.0, max = 0.0;
};

struct UniquenessReport {
  bool pass = true;
  double tolerance = 1e-6;
  std::vector<RatioClass> classes;
};

/// p1/p2 per sign class of p1 over samples with p1 ≠ 0; pass iff every class
/// has coefficient of variation ≤ tol.
UniquenessReport uniqueness_check(const ScalarField& field, const Decomposition& d1,
                                  const Decomposition& d2, const SamplingPlan& plan, double tol = 1e-6);

struct OrderWitness {
  Vec x, y;
  double fx, fy, px, py;
};

struct OrderEquivalenceReport {
  bool pass = true;
  std::size_t trials = 0;
  std::size_t disagreements = 0;
  std::vector<OrderWitness> witnesses;
};

/// Compares sign(f(x) - f(y)) with sign(p(x) - p(y)) at absolute points
/// x = x★_f + z. Axis pairs (e_b, e_a/2) are probed before random pairs.
OrderEquivalenceReport order_equivalence(const ScalarField& f, const ScalarField& p,
                                         const SamplingPlan& plan);

struct ContinuityReport {
  bool pass = true;
  bool skipped = false;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;  // max |Δp| / (L‖δ‖)
  std::vector<Vec> witnesses;
};

/// |p(x+δ) - p(x)| ≤ L‖δ‖ for ‖δ‖ ≤ 1e-6, with L = 10·|(φ⁻¹)'(f(x))|·‖∇f(x)‖.
/// Skipped for fields not claimed continuous.
ContinuityReport continuity_probe(const ScalarField& field, const Decomposition& d,
                                  const SamplingPlan& plan);

}  // namespace siph
