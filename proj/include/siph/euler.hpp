#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siph/decomposition.hpp"
#include "siph/field.hpp"
#include "siph/ray_analysis.hpp"

namespace siph {

struct EulerOptions {
  /// Samples with ‖x - x★‖ below this fraction of the box radius are redrawn.
  double min_radius_fraction = 0.1;
  /// Samples with some |x_i - x★_i| below this are redrawn (keeps finite
  /// differences off kinks on the axes).
  double axis_margin = 0.0;
};

struct EulerReport {
  double max_residual = 0.0;
  std::vector<double> residuals;
  GradientSpec spec;
  double alpha = 1.0;
  std::size_t excluded = 0;
  Vec worst_point;
};

/// max |α p(x) - ∇p(x)·x| over samples (offsets from x★).
EulerReport euler_residual(const ScalarField& p, double alpha, const SamplingPlan& plan,
                           const GradientSpec& spec = {}, const EulerOptions& opts = {});

struct GeneralEulerPoint {
  double lhs = 0.0;  // ∇f(x)·x
  double rhs = 0.0;  // α φ'(p(x)) p(x)
};

/// Both sides of ∇f(x)·x = α φ'(p(x)) p(x) at one absolute point. φ' is a
/// central difference on the profile with step phi_step·|p|.
GeneralEulerPoint general_euler_at(const ScalarField& f, const Decomposition& d, std::span<const double> x,
                                   const GradientSpec& spec = {}, double phi_step = 1e-4);

/// Residual of the identity above; samples with |p| < 0.01·max_{unit sphere}|p|
/// are excluded.
EulerReport general_euler_residual(const ScalarField& f, const Decomposition& d, const SamplingPlan& plan,
                                   const GradientSpec& spec = {}, double phi_step = 1e-4);

struct LevelGradientReport {
  bool pass = true;
  double level = 0.0;
  double tolerance = 1e-6;
  double min_value = 0.0, max_value = 0.0, spread = 0.0;
  std::vector<double> values;
  std::vector<Vec> points;  // offsets z with f(x★ + z) = level
  std::size_t skipped = 0;
};

/// Spread of ∇f(z)·z over points of the level set found along seeded rays.
LevelGradientReport levelset_gradient_constancy(const ScalarField& f, double c, std::size_t n_points,
                                                const GradientSpec& spec = {}, std::uint64_t seed = 0,
                                                double tol = 1e-6);

struct PairedLevel {
  double r = 0.0;
  double s = 0.0;
  double residual = 0.0;  // r²e^{-r²} - s²e^{-s²}
  int iterations = 0;
};

/// The s > 1 with s²e^{-s²} = r²e^{-r²}. Throws std::invalid_argument unless
/// 0 < r < 1.
PairedLevel paired_level_solver(double r);

struct SaddleShell {
  int k = 0;
  double radius = 0.0;
  double max_grad_norm = 0.0;
  bool pass = true;
};

struct SaddleReport {
  bool pass = true;
  double tolerance = 1e-6;
  std::vector<SaddleShell> shells;
  bool rays_increasing = true;
  std::size_t rays_checked = 0;
  std::optional<Vec> non_increasing_direction;
};

/// Checks ‖∇f‖ ≤ tol on the shells ‖x - x★‖ = √(kπ), k = 1..k_max, and that
/// every sampled ray stays strictly increasing across them. Only for the
/// saddle_si gallery entry.
SaddleReport saddle_levels(const ScalarField& f, int k_max, double tol = 1e-6,
                           std::size_t points_per_shell = 16, std::uint64_t seed = 0);

struct CertificateOptions {
  std::uint64_t seed = 0;
  std::size_t level_points = 256;
  std::size_t perturbations = 4;
  double delta_start = 1e-4;
  double delta_cap = 0.5;
  int scan_steps = 64;
  GradientSpec spec;
};

struct ScanStep {
  double t = 0.0;
  double derivative = 0.0;
};

struct NeighborhoodCertificate {
  bool found = false;
  std::string failure;
  Vec s;   // argmin of f on the unit sphere
  Vec z0;  // t0·s
  double t0 = 0.0;
  double level = 0.0;
  /// min ∇f(z)·z over the sampled level set; an estimate from above of the
  /// true minimum, exact only over the samples.
  double epsilon = 0.0;
  /// Largest tried δ with ∇f(z)·z > 0 on every fattened sample.
  double delta = 0.0;
  /// Largest tried δ with ∇f(z)·z ≥ ε/2 on every fattened sample.
  double delta_margin = 0.0;
  std::string stop_reason;  // "cap" or "violation"
  double level_radius_min = 0.0, level_radius_max = 0.0;
  std::size_t level_samples = 0;
  std::size_t fattened_samples = 0;
  std::size_t skipped = 0;
  std::vector<ScanStep> scan;
};

/// Searches for z0 in the closed unit ball such that z ↦ ∇f(z)·z is positive
/// on a δ-neighborhood of the level set through z0.
NeighborhoodCertificate positive_gradient_region(const ScalarField& f, const CertificateOptions& opts = {});

}  // namespace siph
