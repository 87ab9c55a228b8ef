#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "siph/random.hpp"

namespace siph {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Regularity claimed by whoever built the field. Probes only rely on what
/// they need and record the claim.
enum class Regularity { unknown, lower_semicontinuous, continuous, differentiable, c1 };

const char* to_string(Regularity r);

struct FieldInfo {
  std::string name;
  std::optional<double> ph_degree;
  bool declared_si = false;
  Regularity regularity = Regularity::unknown;
};

using Evaluator = std::function<double(std::span<const double>)>;
using GradientFn = std::function<Vec(std::span<const double>)>;

/// Real-valued function on R^n with a reference point x★.
///
/// Evaluators and gradients take absolute coordinates. The object is an
/// immutable handle; copies share the same underlying callables.
class ScalarField {
 public:
  ScalarField(std::size_t n, Evaluator f, FieldInfo info = {}, GradientFn grad = {},
              Vec reference = {});

  std::size_t dim() const { return impl_->n; }
  const Vec& reference() const { return impl_->reference; }
  const FieldInfo& info() const { return impl_->info; }
  const std::string& name() const { return impl_->info.name; }
  bool has_gradient() const { return static_cast<bool>(impl_->grad); }

  /// f(x). Throws DimensionError when x has the wrong length.
  double value(std::span<const double> x) const;
  double operator()(std::span<const double> x) const { return value(x); }

  double reference_value() const { return impl_->reference_value; }
  /// f(x★ + z).
  double at_offset(std::span<const double> z) const;
  /// f(x★ + z) - f(x★).
  double centered(std::span<const double> z) const { return at_offset(z) - reference_value(); }

  std::optional<Vec> analytic_gradient(std::span<const double> x) const;

  /// x ↦ f(x - c), with reference point moved to x★ + c.
  ScalarField translated(std::span<const double> c) const;
  ScalarField with_info(FieldInfo info) const;
  ScalarField with_reference(Vec reference) const;

 private:
  struct Impl {
    std::size_t n;
    Evaluator f;
    GradientFn grad;
    FieldInfo info;
    Vec reference;
    double reference_value;
  };
  explicit ScalarField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

double evaluate(const ScalarField& field, std::span<const double> x);

struct GradientSpec {
  double step = 1e-5;
  bool prefer_analytic = true;
};

/// Central differences with step h·(1+‖x‖). An analytic gradient, when the
/// field has one and spec.prefer_analytic is set, is returned instead.
Vec gradient(const ScalarField& field, std::span<const double> x, const GradientSpec& spec = {});
Vec finite_difference_gradient(const ScalarField& field, std::span<const double> x, double step);

/// t ↦ f(x★ + t·x) on [0, ∞).
class RaySection {
 public:
  RaySection(ScalarField field, Vec direction);

  double eval(double t) const;
  /// eval(t) - f(x★).
  double centered(double t) const { return eval(t) - field_.reference_value(); }
  const Vec& direction() const { return direction_; }
  const ScalarField& field() const { return field_; }

 private:
  ScalarField field_;
  Vec direction_;
};

RaySection ray_section(const ScalarField& field, std::span<const double> x);

double norm2(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
Vec scaled(std::span<const double> x, double s);
Vec unit_vector(std::size_t n, std::size_t axis, double value = 1.0);

}  // namespace siph
