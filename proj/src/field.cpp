#include "siph/field.hpp"

#include <cmath>

namespace siph {

const char* to_string(Regularity r) {
  switch (r) {
    case Regularity::lower_semicontinuous: return "lower_semicontinuous";
    case Regularity::continuous: return "continuous";
    case Regularity::differentiable: return "differentiable";
    case Regularity::c1: return "c1";
    case Regularity::unknown: break;
  }
  return "unknown";
}

namespace {

void check_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace

ScalarField::ScalarField(std::size_t n, Evaluator f, FieldInfo info, GradientFn grad,
                         Vec reference) {
  if (n == 0) throw DimensionError("field dimension must be positive");
  if (!f) throw std::invalid_argument("field evaluator is empty");
  if (reference.empty()) reference.assign(n, 0.0);
  check_dim(n, reference.size(), "reference point");
  const double f_ref = f(reference);
  impl_ = std::make_shared<const Impl>(
      Impl{n, std::move(f), std::move(grad), std::move(info), std::move(reference), f_ref});
}

double ScalarField::value(std::span<const double> x) const {
  check_dim(impl_->n, x.size(), "evaluate");
  return impl_->f(x);
}

double ScalarField::at_offset(std::span<const double> z) const {
  check_dim(impl_->n, z.size(), "evaluate");
  Vec x(impl_->n);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = impl_->reference[i] + z[i];
  return impl_->f(x);
}

std::optional<Vec> ScalarField::analytic_gradient(std::span<const double> x) const {
  check_dim(impl_->n, x.size(), "gradient");
  if (!impl_->grad) return std::nullopt;
  return impl_->grad(x);
}

ScalarField ScalarField::translated(std::span<const double> c) const {
  check_dim(impl_->n, c.size(), "translation");
  Vec shift(c.begin(), c.end());
  auto f = impl_->f;
  Evaluator g = [f, shift](std::span<const double> x) {
    Vec y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - shift[i];
    return f(y);
  };
  GradientFn dg;
  if (impl_->grad) {
    auto grad = impl_->grad;
    dg = [grad, shift](std::span<const double> x) {
      Vec y(x.size());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] - shift[i];
      return grad(y);
    };
  }
  Vec ref = impl_->reference;
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += shift[i];
  return ScalarField(impl_->n, std::move(g), impl_->info, std::move(dg), std::move(ref));
}

ScalarField ScalarField::with_info(FieldInfo info) const {
  auto impl = std::make_shared<Impl>(*impl_);
  impl->info = std::move(info);
  return ScalarField(std::shared_ptr<const Impl>(std::move(impl)));
}

ScalarField ScalarField::with_reference(Vec reference) const {
  return ScalarField(impl_->n, impl_->f, impl_->info, impl_->grad, std::move(reference));
}

double evaluate(const ScalarField& field, std::span<const double> x) { return field.value(x); }

Vec finite_difference_gradient(const ScalarField& field, std::span<const double> x, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("gradient step must be positive");
  const std::size_t n = field.dim();
  check_dim(n, x.size(), "gradient");
  const double h = step * (1.0 + std::sqrt(norm2(x)));
  Vec probe(x.begin(), x.end());
  Vec g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = probe[i];
    probe[i] = xi + h;
    const double fp = field.value(probe);
    probe[i] = xi - h;
    const double fm = field.value(probe);
    probe[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vec gradient(const ScalarField& field, std::span<const double> x, const GradientSpec& spec) {
  if (spec.prefer_analytic && field.has_gradient()) return *field.analytic_gradient(x);
  return finite_difference_gradient(field, x, spec.step);
}

RaySection::RaySection(ScalarField field, Vec direction)
    : field_(std::move(field)), direction_(std::move(direction)) {
  check_dim(field_.dim(), direction_.size(), "ray direction");
}

double RaySection::eval(double t) const {
  const Vec& ref = field_.reference();
  Vec x(direction_.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = ref[i] + t * direction_[i];
  return field_.value(x);
}

RaySection ray_section(const ScalarField& field, std::span<const double> x) {
  return RaySection(field, Vec(x.begin(), x.end()));
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec scaled(std::span<const double> x, double s) {
  Vec y(x.begin(), x.end());
  for (auto& v : y) v *= s;
  return y;
}

Vec unit_vector(std::size_t n, std::size_t axis, double value) {
  Vec e(n, 0.0);
  e.at(axis) = value;
  return e;
}

}  // namespace siph
