#include "siph/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "siph/parallel.hpp"
#include "siph/roots.hpp"

namespace siph {

const char* to_string(RadiusStatus s) {
  switch (s) {
    case RadiusStatus::found: return "found";
    case RadiusStatus::unbounded: return "unbounded";
    case RadiusStatus::no_intersection: return "no_intersection";
  }
  return "?";
}

const char* to_string(CompactnessVerdict v) {
  return v == CompactnessVerdict::bounded ? "bounded" : "unbounded_evidence";
}

LevelRadius ray_level_radius(const ScalarField& field, std::span<const double> d, double c,
                             std::optional<double> tol, const Vec& grid) {
  const MonotoneVerdict v = classify_ray(field, d, grid);
  LevelRadius out;
  out.ray = v.kind;
  if (v.kind == Monotonicity::non_monotone) {
    throw std::invalid_argument("ray_level_radius: ray is not monotone");
  }
  if (v.kind == Monotonicity::constant) {
    out.status = RadiusStatus::unbounded;
    out.residual = field.reference_value() - c;
    return out;
  }
  const double f0 = field.reference_value();
  const int orient = v.kind == Monotonicity::increasing ? 1 : -1;
  if (c == f0) {
    out.status = RadiusStatus::found;
    return out;
  }
  if (orient * (c - f0) < 0.0) {
    out.status = RadiusStatus::no_intersection;
    out.residual = f0 - c;
    return out;
  }
  const RaySection ray = ray_section(field, d);
  const double band = tol ? *tol : 1e-9 * (1.0 + std::fabs(c));
  const RootResult r = solve_monotone([&](double t) { return ray.eval(t); }, c, orient);
  if (!r.t) {
    const double far = ray.eval(BracketOptions{}.upper_cap);
    out.status = orient * (far - c) < 0.0 ? RadiusStatus::unbounded : RadiusStatus::no_intersection;
    out.residual = r.residual;
    return out;
  }
  out.residual = ray.eval(*r.t) - c;
  if (!(std::fabs(out.residual) <= band)) {
    out.status = RadiusStatus::no_intersection;  // level falls inside a jump
    return out;
  }
  out.status = RadiusStatus::found;
  out.radius = *r.t;
  return out;
}

namespace {

constexpr double kGolden = 0.6180339887498949;

void normalize(Vec& u) {
  const double r = std::sqrt(norm2(u));
  for (auto& v : u) v /= r;
}

// Moves u along great circles to lower sense·p; returns the final value.
double refine_on_sphere(const ScalarField& p, Vec& u, double sense, int steps, std::size_t& evals) {
  const std::size_t n = u.size();
  auto h = [&](const Vec& v) {
    ++evals;
    return sense * p.at_offset(v);
  };
  double best = h(u);
  if (n < 2) return best;
  double width = std::numbers::pi / 4.0;
  Vec point(n), tangent(n);
  for (int s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) tangent[k] = (k == i ? 1.0 : 0.0) - u[i] * u[k];
      const double tn = std::sqrt(norm2(tangent));
      if (tn < 1e-8) continue;
      for (auto& v : tangent) v /= tn;
      auto arc = [&](double th) {
        for (std::size_t k = 0; k < n; ++k) point[k] = std::cos(th) * u[k] + std::sin(th) * tangent[k];
        return h(point);
      };
      double a = -width, b = width;
      double c1 = b - kGolden * (b - a), c2 = a + kGolden * (b - a);
      double h1 = arc(c1), h2 = arc(c2);
      for (int it = 0; it < 40; ++it) {
        if (h1 < h2) {
          b = c2;
          c2 = c1;
          h2 = h1;
          c1 = b - kGolden * (b - a);
          h1 = arc(c1);
        } else {
          a = c1;
          c1 = c2;
          h1 = h2;
          c2 = a + kGolden * (b - a);
          h2 = arc(c2);
        }
      }
      const double th = h1 < h2 ? c1 : c2;
      const double hv = std::min(h1, h2);
      if (hv < best) {
        best = hv;
        for (std::size_t k = 0; k < n; ++k) u[k] = std::cos(th) * u[k] + std::sin(th) * tangent[k];
        normalize(u);
      }
    }
    width = std::max(width * 0.7, 1e-6);
  }
  return best;
}

}  // namespace

SphereExtrema sphere_extrema(const ScalarField& p, std::size_t n_samples, int refine_steps,
                             std::uint64_t seed) {
  const std::size_t n = p.dim();
  std::vector<Vec> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.push_back(unit_vector(n, i, 1.0));
    cand.push_back(unit_vector(n, i, -1.0));
  }
  Rng rng(derive_seed(seed, 9, 0));
  for (std::size_t i = 0; i < n_samples; ++i) cand.push_back(uniform_sphere(rng, n));

  SphereExtrema out;
  std::vector<double> vals(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) vals[i] = p.at_offset(cand[i]);
  out.evaluations = cand.size();

  std::vector<std::size_t> order(cand.size());
  std::iota(order.begin(), order.end(), 0);
  for (double sense : {1.0, -1.0}) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sense * vals[a] < sense * vals[b]; });
    double best = sense * vals[order[0]];
    Vec best_u = cand[order[0]];
    for (std::size_t j = 0; j < std::min<std::size_t>(8, order.size()); ++j) {
      Vec u = cand[order[j]];
      const double v = refine_on_sphere(p, u, sense, refine_steps, out.evaluations);
      if (v < best) {
        best = v;
        best_u = u;
      }
    }
    if (sense > 0) {
      out.m = best;
      out.argmin = best_u;
    } else {
      out.M = -best;
      out.argmax = best_u;
    }
  }
  return out;
}

namespace {

void add_witness(BoundsReport& r, BoundsWitness w) {
  ++r.violations;
  if (r.witnesses.size() < kMaxWitnesses) r.witnesses.push_back(std::move(w));
}

void merge(BoundsReport& into, BoundsReport& from) {
  into.samples += from.samples;
  into.violations += from.violations;
  for (auto& w : from.witnesses) {
    if (into.witnesses.size() >= kMaxWitnesses) break;
    into.witnesses.push_back(std::move(w));
  }
}

}  // namespace

BoundsReport check_ph_sandwich(const ScalarField& p, double alpha, double m_p, double M_p,
                               const SamplingPlan& plan) {
  plan.validate();
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  BoundsReport rep;
  rep.m_p = rep.m = m_p;
  rep.M_p = rep.M = M_p;
  const std::size_t n = p.dim();
  const double lo_c = std::pow(m_p, 1.0 / alpha);
  const double hi_c = std::pow(M_p, 1.0 / alpha);
  auto chunks = map_chunks<BoundsReport>(
      plan.samples, plan.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Rng rng(derive_seed(plan.seed, 10, c));
        BoundsReport acc;
        for (std::size_t k = begin; k < end; ++k) {
          const Vec z = uniform_box(rng, n, plan.box_radius);
          const double r = std::sqrt(norm2(z));
          if (r == 0.0) continue;
          ++acc.samples;
          const double pv = p.centered(z);
          if (!(pv > 0.0)) {
            add_witness(acc, {z, pv, 0.0, "nonpositive"});
            continue;
          }
          const double root = std::pow(pv, 1.0 / alpha);
          const double lower = r * lo_c, upper = r * hi_c;
          if (root < lower * (1.0 - 1e-9)) add_witness(acc, {z, root, lower, "lower"});
          if (root > upper * (1.0 + 1e-9)) add_witness(acc, {z, root, upper, "upper"});
        }
        return acc;
      });
  for (auto& c : chunks) merge(rep, c);
  rep.pass = rep.violations == 0;
  return rep;
}

BoundsReport check_si_sandwich(const ScalarField& field, const Decomposition& d,
                               const SamplingPlan& plan, std::size_t extrema_samples) {
  plan.validate();
  BoundsReport rep;
  const std::size_t n = field.dim();
  if (d.kind() != DecompositionCase::one_sided || !(field.centered(*d.x0()) > 0.0)) {
    rep.pass = false;
    rep.precondition_failed = true;
    rep.note = "x* is not the unique argmin: the decomposition is " + std::string(to_string(d.kind())) +
               (d.kind() == DecompositionCase::one_sided ? " with decreasing rays" : "");
    return rep;
  }
  const double alpha = d.alpha();
  const SphereExtrema ext = sphere_extrema(field, extrema_samples ? extrema_samples : 256 * n, 12, plan.seed);
  Vec xmin = ext.argmin, xmax = ext.argmax;
  for (std::size_t i = 0; i < n; ++i) {
    xmin[i] += field.reference()[i];
    xmax[i] += field.reference()[i];
  }
  rep.m_p = d.p(xmin);
  rep.M_p = d.p(xmax);
  rep.m = field.reference_value() + d.phi(rep.m_p);
  rep.M = field.reference_value() + d.phi(rep.M_p);
  if (!(rep.m_p > 0.0) || !std::isfinite(rep.M_p)) {
    rep.pass = false;
    rep.precondition_failed = true;
    rep.note = "p is not positive on the unit sphere";
    return rep;
  }
  const double m1 = std::pow(rep.m_p, 1.0 / alpha);
  const double M1 = std::pow(rep.M_p, 1.0 / alpha);
  auto phi1 = [&](double s) { return d.phi(std::pow(s, alpha)); };
  auto phi1_inv = [&](double y) { return std::pow(d.phi_inverse(y), 1.0 / alpha); };

  auto chunks = map_chunks<BoundsReport>(
      plan.samples, plan.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Rng rng(derive_seed(plan.seed, 11, c));
        BoundsReport acc;
        for (std::size_t k = begin; k < end; ++k) {
          const Vec z = uniform_box(rng, n, plan.box_radius);
          const Vec y = uniform_box(rng, n, plan.box_radius);
          const double rho = plan.box_radius * rng.log_uniform(plan.rho_min, plan.rho_max);
          const Vec w = uniform_ball(rng, n, rho);
          const double r = std::sqrt(norm2(z));
          if (r == 0.0) continue;
          ++acc.samples;
          const double fz = field.centered(z);
          const double band = 1e-9 * (1.0 + std::fabs(fz));
          const double lower = phi1(m1 * r), upper = phi1(M1 * r);
          if (fz < lower - band) add_witness(acc, {z, fz, lower, "lower"});
          if (fz > upper + band) add_witness(acc, {z, fz, upper, "upper"});

          const double fw = field.centered(w);
          const double inner = phi1(rho * M1);
          if (fw > inner + 1e-9 * (1.0 + std::fabs(inner))) add_witness(acc, {w, fw, inner, "inner_ball"});

          const double fy = field.centered(y);
          if (fz > 0.0 && fy <= fz) {
            const double radius = phi1_inv(fz) / m1;
            const double ny = std::sqrt(norm2(y));
            if (ny > radius * (1.0 + 1e-9)) add_witness(acc, {y, ny, radius, "outer_ball"});
          }
        }
        return acc;
      });
  for (auto& c : chunks) merge(rep, c);
  rep.pass = rep.violations == 0;
  return rep;
}

CompactnessReport compactness_probe(const ScalarField& field, const std::vector<Vec>& directions,
                                    double c, const Vec& grid) {
  CompactnessReport rep;
  rep.level = c;
  std::vector<std::pair<int, CompactnessWitness>> found;
  for (const auto& d : directions) {
    const MonotoneVerdict v = classify_ray(field, d, grid);
    LevelRadius lr;
    lr.ray = v.kind;
    int priority = -1;
    std::string reason;
    switch (v.kind) {
      case Monotonicity::constant: priority = 0, reason = "constant_ray"; break;
      case Monotonicity::non_monotone: priority = 1, reason = "non_monotone_ray"; break;
      case Monotonicity::decreasing: priority = 2, reason = "decreasing_ray"; break;
      case Monotonicity::increasing:
        lr = ray_level_radius(field, d, c, std::nullopt, grid);
        if (lr.status == RadiusStatus::unbounded) {
          priority = 3, reason = "unbounded_radius";
        } else if (lr.status == RadiusStatus::found) {
          rep.max_radius = std::max(rep.max_radius, lr.radius * std::sqrt(norm2(d)));
        }
        break;
    }
    if (v.kind != Monotonicity::increasing) lr.status = RadiusStatus::unbounded;
    rep.radii.push_back(lr);
    if (priority >= 0) found.push_back({priority, CompactnessWitness{d, reason}});
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [_, w] : found) rep.witnesses.push_back(std::move(w));
  rep.verdict = rep.witnesses.empty() ? CompactnessVerdict::bounded : CompactnessVerdict::unbounded_evidence;
  return rep;
}

NegligibilityReport negligibility_probe(const ScalarField& field, double c, const Vec& eps_list,
                                        std::size_t samples, double box_radius, std::uint64_t seed,
                                        unsigned threads, double kappa) {
  if (eps_list.empty()) throw std::invalid_argument("eps list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("eps values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw std::invalid_argument("eps list must be strictly decreasing");
    }
  }
  if (samples == 0) throw std::invalid_argument("sample count must be at least 1");
  if (!(box_radius > 0.0)) throw std::invalid_argument("box radius must be positive");
  const std::size_t n = field.dim();
  auto chunks = map_chunks<std::vector<std::size_t>>(
      samples, threads, [&](std::size_t ch, std::size_t begin, std::size_t end) {
        Rng rng(derive_seed(seed, 8, ch));
        std::vector<std::size_t> hits(eps_list.size(), 0);
        for (std::size_t k = begin; k < end; ++k) {
          const Vec z = uniform_box(rng, n, box_radius);
          const double dev = std::fabs(field.at_offset(z) - c);
          for (std::size_t e = 0; e < eps_list.size(); ++e)
            if (dev <= eps_list[e]) ++hits[e];
        }
        return hits;
      });
  NegligibilityReport rep;
  rep.samples = samples;
  rep.kappa = kappa;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    ShellFraction s;
    s.eps = eps_list[e];
    for (const auto& h : chunks) s.hits += h[e];
    s.fraction = static_cast<double>(s.hits) / static_cast<double>(samples);
    s.sigma = std::sqrt(s.fraction * (1.0 - s.fraction) / static_cast<double>(samples));
    rep.shells.push_back(s);
  }
  for (std::size_t e = 1; e < rep.shells.size(); ++e) {
    if (rep.shells[e].fraction > rep.shells[e - 1].fraction) {
      rep.pass = false;
      rep.note = "shell fraction grew when eps shrank";
    }
  }
  const ShellFraction& last = rep.shells.back();
  if (rep.shells.size() > 1 && !(last.fraction < rep.shells.front().fraction)) {
    rep.pass = false;
    rep.note = "shell fraction did not shrink with eps";
  }
  if (!(last.fraction <= kappa * last.eps)) {
    rep.pass = false;
    if (rep.note.empty()) rep.note = "smallest shell fraction exceeds kappa * eps";
  }
  return rep;
}

}  // namespace siph
