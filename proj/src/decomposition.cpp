#include "siph/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "siph/parallel.hpp"

namespace siph {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kCacheCapacity = 1u << 16;

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

// One side of the construction: rays whose values have sign `value_sign`
// are matched against f(x★ + dir) and mapped to p of sign `p_sign`.
struct Branch {
  Vec dir;
  double ref_value = 0.0;  // centered
  int value_sign = 0;      // sign of ref_value; also the ray orientation
  int p_sign = 1;
};

std::string key_of(std::span<const double> z) {
  std::string k(z.size() * sizeof(double), '\0');
  std::memcpy(k.data(), z.data(), k.size());
  return k;
}

}  // namespace

struct Decomposition::Impl {
  DecompositionCase kind = DecompositionCase::zero;
  double alpha = 1.0;
  Orientation orientation = Orientation::increasing;
  std::size_t n = 0;
  Vec reference;
  double reference_value = 0.0;
  double zero_tol = 0.0;
  BracketOptions bracket;
  std::optional<ScalarField> field;
  std::optional<Vec> x0, x_pos, x_neg;
  std::vector<Branch> branches;

  std::optional<ScalarField> p_explicit;
  std::function<double(double)> phi_explicit;  // centered

  mutable std::shared_mutex cache_mutex;
  mutable std::unordered_map<std::string, double> cache;

  const Branch* branch_for_value(double v) const {
    for (const auto& b : branches)
      if (b.value_sign == sgn(v)) return &b;
    return nullptr;
  }
  const Branch* branch_for_p(double t) const {
    for (const auto& b : branches)
      if (b.p_sign == sgn(t)) return &b;
    return nullptr;
  }

  double centered_on_ray(const Vec& dir, double t) const {
    Vec z(dir.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = t * dir[i];
    return field->centered(z);
  }

  std::optional<double> solve_ray(const Vec& dir, double target, int orientation) const {
    auto g = [&](double t) { return centered_on_ray(dir, t); };
    RootResult r = solve_monotone(g, target, orientation, bracket);
    if (!r.t) return std::nullopt;
    return *r.t;
  }

  // Returns (sign of value, λ). sign 0 means the zero level; λ NaN means the
  // bracket search failed.
  std::pair<int, double> solve(std::span<const double> x) const {
    Vec z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - reference[i];
    const double v = field->centered(z);
    if (std::isnan(v)) return {0, kNaN};
    if (std::fabs(v) <= zero_tol) return {0, 0.0};
    const Branch* b = branch_for_value(v);
    if (!b) return {sgn(v), kNaN};

    const std::string key = key_of(z);
    {
      std::shared_lock lock(cache_mutex);
      if (auto it = cache.find(key); it != cache.end()) return {sgn(v), it->second};
    }
    const auto lam = solve_ray(z, b->ref_value, b->value_sign);
    const double value = lam ? *lam : kNaN;
    {
      std::unique_lock lock(cache_mutex);
      if (cache.size() < kCacheCapacity) cache.emplace(key, value);
    }
    return {sgn(v), value};
  }
};

const char* to_string(DecompositionCase c) {
  switch (c) {
    case DecompositionCase::zero: return "zero";
    case DecompositionCase::one_sided: return "one_sided";
    case DecompositionCase::two_sided: return "two_sided";
    case DecompositionCase::explicit_parts: return "explicit";
  }
  return "?";
}

DecompositionCase Decomposition::kind() const { return impl_->kind; }
double Decomposition::alpha() const { return impl_->alpha; }
Orientation Decomposition::orientation() const { return impl_->orientation; }
std::size_t Decomposition::dim() const { return impl_->n; }
const Vec& Decomposition::reference() const { return impl_->reference; }
double Decomposition::reference_value() const { return impl_->reference_value; }
const std::optional<Vec>& Decomposition::x0() const { return impl_->x0; }
const std::optional<Vec>& Decomposition::x_pos() const { return impl_->x_pos; }
const std::optional<Vec>& Decomposition::x_neg() const { return impl_->x_neg; }
double Decomposition::zero_tolerance() const { return impl_->zero_tol; }

std::optional<double> Decomposition::lambda(std::span<const double> x) const {
  if (x.size() != impl_->n) throw DimensionError("decomposition: wrong point dimension");
  if (impl_->kind == DecompositionCase::zero || impl_->kind == DecompositionCase::explicit_parts) {
    return std::nullopt;
  }
  const auto [sign, lam] = impl_->solve(x);
  if (sign == 0 || std::isnan(lam)) return std::nullopt;
  return lam;
}

double Decomposition::p(std::span<const double> x) const {
  if (x.size() != impl_->n) throw DimensionError("decomposition: wrong point dimension");
  switch (impl_->kind) {
    case DecompositionCase::zero: return 0.0;
    case DecompositionCase::explicit_parts: return impl_->p_explicit->value(x);
    default: break;
  }
  const auto [sign, lam] = impl_->solve(x);
  if (sign == 0) return std::isnan(lam) ? kNaN : 0.0;
  if (std::isnan(lam)) return kNaN;
  const Branch* b = impl_->branch_for_value(sign);
  const double mag = impl_->alpha == 1.0 ? 1.0 / lam : std::pow(lam, -impl_->alpha);
  return b->p_sign * mag;
}

double Decomposition::phi(double t) const {
  if (impl_->kind == DecompositionCase::explicit_parts) return impl_->phi_explicit(t);
  if (t == 0.0) return 0.0;
  if (std::isnan(t)) return kNaN;
  const Branch* b = impl_->branch_for_p(t);
  if (!b) {
    throw DecompositionError("phi is not defined for t of this sign in the " +
                             std::string(to_string(impl_->kind)) + " case");
  }
  const double s = impl_->alpha == 1.0 ? std::fabs(t) : std::pow(std::fabs(t), 1.0 / impl_->alpha);
  return impl_->centered_on_ray(b->dir, s);
}

double Decomposition::phi_inverse(double y) const {
  if (y == 0.0) return 0.0;
  if (!std::isfinite(y)) throw DecompositionError("phi_inverse: non-finite value");
  if (impl_->kind == DecompositionCase::explicit_parts) {
    const auto& phi = impl_->phi_explicit;
    for (int side : {1, -1}) {
      const double probe = phi(side * 1.0);
      if (!std::isfinite(probe) || sgn(probe) != sgn(y)) continue;
      auto g = [&](double s) { return phi(side * s); };
      RootResult r = solve_monotone(g, y, sgn(probe), impl_->bracket);
      if (r.t) return side * *r.t;
    }
    throw DecompositionError("phi_inverse: value outside the achieved range");
  }
  const Branch* b = impl_->branch_for_value(y);
  if (!b) throw DecompositionError("phi_inverse: value has a sign phi never reaches");
  const auto s = impl_->solve_ray(b->dir, y, b->value_sign);
  if (!s) throw DecompositionError("phi_inverse: value outside the achieved range");
  const double mag = impl_->alpha == 1.0 ? *s : std::pow(*s, impl_->alpha);
  return b->p_sign * mag;
}

ScalarField Decomposition::p_field() const {
  if (impl_->kind == DecompositionCase::explicit_parts) return *impl_->p_explicit;
  Decomposition self = *this;
  FieldInfo info;
  info.name = "p[" + (impl_->field ? impl_->field->name() : std::string("?")) + "]";
  info.ph_degree = impl_->alpha;
  info.declared_si = true;
  info.regularity = impl_->field ? impl_->field->info().regularity : Regularity::unknown;
  return ScalarField(impl_->n, [self](std::span<const double> x) { return self.p(x); },
                     std::move(info), {}, impl_->reference);
}

Decomposition Decomposition::from_parts(ScalarField p, std::function<double(double)> phi_absolute,
                                        double alpha, double reference_value) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
  auto impl = std::make_shared<Impl>();
  impl->kind = DecompositionCase::explicit_parts;
  impl->alpha = alpha;
  impl->n = p.dim();
  impl->reference = p.reference();
  impl->reference_value = reference_value;
  impl->zero_tol = 1e-12 * (1.0 + std::fabs(reference_value));
  impl->phi_explicit = [phi_absolute, reference_value](double t) {
    return phi_absolute(t) - reference_value;
  };
  impl->p_explicit = std::move(p);
  return Decomposition(std::move(impl));
}

Decomposition build_decomposition(const ScalarField& field, const DecompositionOptions& opts) {
  if (!(opts.alpha > 0.0) || !std::isfinite(opts.alpha)) {
    throw std::invalid_argument("alpha must be a positive real");
  }
  const std::size_t n = field.dim();
  auto impl = std::make_shared<Decomposition::Impl>();
  impl->alpha = opts.alpha;
  impl->orientation = opts.orientation;
  impl->n = n;
  impl->reference = field.reference();
  impl->reference_value = field.reference_value();
  impl->zero_tol = 1e-12 * (1.0 + std::fabs(field.reference_value()));
  impl->bracket = opts.bracket;
  impl->field = field;

  auto check_hint = [&](const Vec& v, const char* what) {
    if (v.size() != n) throw DimensionError(std::string(what) + ": expected length " + std::to_string(n));
    return field.centered(v);
  };
  const double tol = impl->zero_tol;

  auto one_sided = [&](Vec x0, double y0) {
    impl->kind = DecompositionCase::one_sided;
    const int s = sgn(y0);
    impl->branches.push_back(
        Branch{x0, y0, s, opts.orientation == Orientation::increasing ? s : 1});
    impl->x0 = std::move(x0);
  };
  auto two_sided = [&](Vec xp, double yp, Vec xn, double yn) {
    impl->kind = DecompositionCase::two_sided;
    impl->branches.push_back(Branch{xp, yp, 1, 1});
    impl->branches.push_back(Branch{xn, yn, -1, -1});
    impl->x_pos = std::move(xp);
    impl->x_neg = std::move(xn);
  };

  if (opts.x_pos || opts.x_neg) {
    if (!opts.x_pos || !opts.x_neg) throw DecompositionError("two-sided hints need both x_pos and x_neg");
    const double yp = check_hint(*opts.x_pos, "x_pos");
    const double yn = check_hint(*opts.x_neg, "x_neg");
    if (!(yp > tol) || !(yn < -tol)) {
      throw DecompositionError("two-sided hints need f(x_pos) > f(x*) > f(x_neg)");
    }
    two_sided(*opts.x_pos, yp, *opts.x_neg, yn);
  } else if (opts.x0) {
    const double y0 = check_hint(*opts.x0, "x0");
    if (!(std::fabs(y0) > tol)) throw DecompositionError("x0 lies on the level set of x*");
    one_sided(*opts.x0, y0);
  } else {
    std::vector<Vec> cand;
    for (std::size_t i = 0; i < n; ++i) {
      cand.push_back(unit_vector(n, i, 1.0));
      cand.push_back(unit_vector(n, i, -1.0));
    }
    Rng rng(derive_seed(opts.seed, 3, 0));
    for (std::size_t i = 0; i < 64 * n; ++i) cand.push_back(uniform_sphere(rng, n));
    std::size_t imax = 0, imin = 0, iabs = 0;
    double vmax = -std::numeric_limits<double>::infinity();
    double vmin = std::numeric_limits<double>::infinity();
    double vabs = -1.0;
    std::vector<double> vals(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const double v = field.centered(cand[i]);
      vals[i] = v;
      if (!std::isfinite(v)) continue;
      if (v > vmax) vmax = v, imax = i;
      if (v < vmin) vmin = v, imin = i;
      if (std::fabs(v) > vabs) vabs = std::fabs(v), iabs = i;
    }
    const bool pos = vmax > tol, neg = vmin < -tol;
    if (pos && neg) {
      two_sided(cand[imax], vals[imax], cand[imin], vals[imin]);
    } else if (pos || neg) {
      one_sided(cand[iabs], vals[iabs]);
    } else {
      impl->kind = DecompositionCase::zero;
    }
  }
  return Decomposition(std::move(impl));
}

DecompositionResiduals verify_decomposition(const ScalarField& field, const Decomposition& d,
                                            const SamplingPlan& plan) {
  plan.validate();
  const std::size_t n = field.dim();
  const Vec& ref = field.reference();
  const double alpha = d.alpha();
  auto chunks = map_chunks<DecompositionResiduals>(
      plan.samples, plan.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Rng rng(derive_seed(plan.seed, 4, c));
        DecompositionResiduals acc;
        for (std::size_t k = begin; k < end; ++k) {
          const Vec z = uniform_box(rng, n, plan.box_radius);
          const double rho = rng.log_uniform(plan.rho_min, plan.rho_max);
          ++acc.samples;
          Vec x(n), xr(n);
          for (std::size_t i = 0; i < n; ++i) {
            x[i] = ref[i] + z[i];
            xr[i] = ref[i] + rho * z[i];
          }
          const double px = d.p(x);
          const double pr = d.p(xr);
          if (!std::isfinite(px) || !std::isfinite(pr)) {
            ++acc.failures;
            continue;
          }
          double value_res;
          try {
            value_res = std::fabs(field.centered(z) - d.phi(px));
          } catch (const DecompositionError&) {
            ++acc.failures;
            continue;
          }
          if (!(value_res <= acc.max_value_residual)) {
            acc.max_value_residual = value_res;
            acc.worst_value_point = x;
          }
          const double scale = std::pow(rho, alpha);
          const double ph = std::fabs(pr - scale * px);
          const double ph_norm = ph / (1.0 + scale * std::fabs(px));
          acc.max_ph_residual = std::max(acc.max_ph_residual, ph);
          if (!(ph_norm <= acc.max_ph_residual_normalized)) {
            acc.max_ph_residual_normalized = ph_norm;
            acc.worst_ph_point = x;
            acc.worst_ph_rho = rho;
          }
        }
        return acc;
      });
  DecompositionResiduals out;
  for (const auto& c : chunks) {
    out.samples += c.samples;
    out.failures += c.failures;
    if (!c.worst_value_point.empty() &&
        (out.worst_value_point.empty() || c.max_value_residual > out.max_value_residual)) {
      out.max_value_residual = c.max_value_residual;
      out.worst_value_point = c.worst_value_point;
    }
    out.max_ph_residual = std::max(out.max_ph_residual, c.max_ph_residual);
    if (!c.worst_ph_point.empty() &&
        (out.worst_ph_point.empty() || c.max_ph_residual_normalized > out.max_ph_residual_normalized)) {
      out.max_ph_residual_normalized = c.max_ph_residual_normalized;
      out.worst_ph_point = c.worst_ph_point;
      out.worst_ph_rho = c.worst_ph_rho;
    }
  }
  return out;
}

UniquenessReport uniqueness_check(const ScalarField& field, const Decomposition& d1,
                                  const Decomposition& d2, const SamplingPlan& plan, double tol) {
  plan.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const std::size_t n = field.dim();
  const Vec& ref = field.reference();
  using Ratios = std::pair<std::vector<double>, std::vector<double>>;
  auto chunks = map_chunks<Ratios>(plan.samples, plan.threads,
                                   [&](std::size_t c, std::size_t begin, std::size_t end) {
                                     Rng rng(derive_seed(plan.seed, 6, c));
                                     Ratios acc;
                                     for (std::size_t k = begin; k < end; ++k) {
                                       Vec x = uniform_box(rng, n, plan.box_radius);
                                       for (std::size_t i = 0; i < n; ++i) x[i] += ref[i];
                                       const double p1 = d1.p(x), p2 = d2.p(x);
                                       if (!std::isfinite(p1) || !std::isfinite(p2) || p1 == 0.0 || p2 == 0.0) continue;
                                       (p1 > 0.0 ? acc.first : acc.second).push_back(p1 / p2);
                                     }
                                     return acc;
                                   });
  std::vector<double> pos, neg;
  for (auto& c : chunks) {
    pos.insert(pos.end(), c.first.begin(), c.first.end());
    neg.insert(neg.end(), c.second.begin(), c.second.end());
  }
  UniquenessReport rep;
  rep.tolerance = tol;
  for (auto [label, vals] : {std::pair{"positive", &pos}, std::pair{"negative", &neg}}) {
    if (vals->empty()) continue;
    RatioClass rc;
    rc.label = label;
    rc.count = vals->size();
    double sum = 0.0;
    for (double v : *vals) sum += v;
    rc.mean = sum / static_cast<double>(rc.count);
    double ss = 0.0;
    for (double v : *vals) ss += (v - rc.mean) * (v - rc.mean);
    rc.cv = std::sqrt(ss / static_cast<double>(rc.count)) / std::fabs(rc.mean);
    rc.min = *std::min_element(vals->begin(), vals->end());
    rc.max = *std::max_element(vals->begin(), vals->end());
    if (!(rc.cv <= tol)) rep.pass = false;
    rep.classes.push_back(rc);
  }
  if (rep.classes.empty()) rep.pass = false;
  return rep;
}

OrderEquivalenceReport order_equivalence(const ScalarField& f, const ScalarField& p,
                                         const SamplingPlan& plan) {
  plan.validate();
  if (f.dim() != p.dim()) throw DimensionError("order_equivalence: fields differ in dimension");
  const std::size_t n = f.dim();
  const Vec& ref = f.reference();
  auto probe = [&](const Vec& z1, const Vec& z2, OrderEquivalenceReport& acc) {
    Vec x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ref[i] + z1[i];
      y[i] = ref[i] + z2[i];
    }
    const double fx = f.value(x), fy = f.value(y), px = p.value(x), py = p.value(y);
    ++acc.trials;
    const bool finite = std::isfinite(fx) && std::isfinite(fy) && std::isfinite(px) && std::isfinite(py);
    if (finite && compare_with_band(fx, fy) == compare_with_band(px, py)) return;
    ++acc.disagreements;
    if (acc.witnesses.size() < kMaxWitnesses) acc.witnesses.push_back(OrderWitness{x, y, fx, fy, px, py});
  };

  OrderEquivalenceReport rep;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      for (double s : {1.0, -1.0}) probe(unit_vector(n, b, s), unit_vector(n, a, 0.5 * s), rep);
    }
  }
  auto chunks = map_chunks<OrderEquivalenceReport>(
      plan.samples, plan.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Rng rng(derive_seed(plan.seed, 5, c));
        OrderEquivalenceReport acc;
        for (std::size_t k = begin; k < end; ++k) {
          const Vec z1 = uniform_box(rng, n, plan.box_radius);
          const Vec z2 = uniform_box(rng, n, plan.box_radius);
          probe(z1, z2, acc);
        }
        return acc;
      });
  for (auto& c : chunks) {
    rep.trials += c.trials;
    rep.disagreements += c.disagreements;
    for (auto& w : c.witnesses) {
      if (rep.witnesses.size() >= kMaxWitnesses) break;
      rep.witnesses.push_back(std::move(w));
    }
  }
  rep.pass = rep.disagreements == 0;
  return rep;
}

ContinuityReport continuity_probe(const ScalarField& field, const Decomposition& d,
                                  const SamplingPlan& plan) {
  plan.validate();
  ContinuityReport rep;
  const Regularity reg = field.info().regularity;
  if (reg == Regularity::unknown || reg == Regularity::lower_semicontinuous) {
    rep.skipped = true;
    return rep;
  }
  const std::size_t n = field.dim();
  const Vec& ref = field.reference();
  Rng rng(derive_seed(plan.seed, 7, 0));
  for (std::size_t k = 0; k < plan.samples; ++k) {
    const Vec z = uniform_box(rng, n, plan.box_radius);
    const Vec delta = uniform_ball(rng, n, 1e-6);
    Vec x(n), xd(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ref[i] + z[i];
      xd[i] = x[i] + delta[i];
    }
    const double p0 = d.p(x);
    if (!std::isfinite(p0) || p0 == 0.0) continue;
    const double p1 = d.p(xd);
    const double kstep = 1e-6 * std::fabs(p0);
    double dphi;
    try {
      dphi = (d.phi(p0 + kstep) - d.phi(p0 - kstep)) / (2.0 * kstep);
    } catch (const DecompositionError&) {
      continue;
    }
    const double grad = std::sqrt(norm2(gradient(field, x)));
    const double L = 10.0 * grad / std::fabs(dphi);
    const double bound = L * std::sqrt(norm2(delta)) + 1e-12 * (1.0 + std::fabs(p0));
    ++rep.samples;
    const double change = std::fabs(p1 - p0);
    if (std::isfinite(bound) && bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, change / bound);
    if (!(change <= bound)) {
      ++rep.violations;
      if (rep.witnesses.size() < kMaxWitnesses) rep.witnesses.push_back(x);
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace siph
