#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "siph/field.hpp"

namespace siph {

class GalleryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Known properties of a builtin field, used by tests as ground truth.
struct GroundTruth {
  bool si = true;
  std::optional<double> ph_degree;
  bool decomposable = true;
  /// Sublevel sets compact, equivalently x★ is the unique global argmin.
  bool compact_sublevel = false;
  bool differentiable = false;
  bool continuous = true;
};

struct GalleryEntry {
  std::string name;
  std::string description;
  std::size_t min_dim = 1;
  GroundTruth truth;
  bool analytic_gradient = false;
  std::vector<std::string> params;
};

/// Named parameters, each a list of reals ("center", "diag", "A", "seed", ...).
using Params = std::map<std::string, std::vector<double>>;

const std::vector<GalleryEntry>& gallery_registry();
const GalleryEntry& gallery_entry(const std::string& name);
nlohmann::ordered_json gallery_json();

/// Builds a registry field in dimension n. Every entry accepts "center"
/// (moves x★). Throws GalleryError for unknown names or bad parameters.
ScalarField make_builtin(const std::string& name, std::size_t n, const Params& params = {});

/// φ(t) = t/2 - sin(2t)/4, the profile of saddle_si.
double saddle_phi(double t);
/// φ(t) = ∫_0^t du / (1 + log² u), the profile of logsq_si (t ≥ 0).
double logsq_phi(double t);

/// Strictly monotone scalar map used to build SI fields as φ∘p.
class MonotoneTransform {
 public:
  enum class Kind { identity, power, exp_neg, affine, tanh, table };

  static MonotoneTransform identity();
  /// Signed power t ↦ sign(t)|t|^β, β > 0.
  static MonotoneTransform power(double beta);
  static MonotoneTransform exp_neg();
  /// t ↦ a·t + b, a > 0.
  static MonotoneTransform affine(double a, double b);
  static MonotoneTransform tanh();
  /// Piecewise-linear interpolation through strictly monotone knots, with
  /// linear extrapolation beyond the ends.
  static MonotoneTransform table(Vec t, Vec y);

  /// Parses "identity", "power:2", "exp_neg", "affine:2,1", "tanh",
  /// "table:t0,y0,t1,y1,...".
  static MonotoneTransform parse(const std::string& spec);

  double operator()(double t) const;
  double derivative(double t) const;
  /// +1 for increasing, -1 for decreasing.
  int orientation() const;
  Kind kind() const { return kind_; }
  /// β for power, a for affine.
  double scale() const { return a_; }
  /// b for affine.
  double offset() const { return b_; }
  std::string describe() const;

 private:
  MonotoneTransform(Kind k) : kind_(k) {}
  Kind kind_;
  double a_ = 1.0;
  double b_ = 0.0;
  Vec knots_t_, knots_y_;
};

/// x ↦ φ(p(x)). p must carry a declared PH degree.
ScalarField compose(const MonotoneTransform& phi, const ScalarField& p);

/// Seeded smooth perturbation of the sphere: f = φ∘p with
/// p(x) = ‖x‖(1 + eps·g(x/‖x‖)), |g| ≤ 1, and φ' ∈ [1/2, 3/2].
class RandomSI {
 public:
  RandomSI(std::uint64_t seed, std::size_t n, double eps, int modes = 4);

  ScalarField field() const;
  /// The PH_1 part p.
  ScalarField homogeneous_part() const;
  double phi(double t) const;
  double phi_prime(double t) const;
  /// Perturbation g on the unit sphere.
  double g(std::span<const double> u) const;
  double p(std::span<const double> x) const;
  Vec grad_p(std::span<const double> x) const;
  double eps() const { return eps_; }

 private:
  std::size_t n_;
  double eps_;
  std::vector<Vec> omega_;
  Vec amp_, phase_;
  double amp_sum_ = 1.0;
  Vec c_, nu_, d_;
  std::string label_;
};

ScalarField random_si(std::uint64_t seed, std::size_t n, double eps, int modes = 4);

}  // namespace siph
