#include "siph/ray_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "siph/parallel.hpp"

namespace siph {

Vec uniform_grid(double T, std::size_t k) {
  if (!(T > 0.0) || k == 0) throw std::invalid_argument("grid needs T > 0 and at least one point");
  Vec g(k);
  for (std::size_t i = 0; i < k; ++i) g[i] = T * static_cast<double>(i + 1) / static_cast<double>(k);
  return g;
}

void SamplingPlan::validate() const {
  if (samples < 1) throw std::invalid_argument("sample count must be at least 1");
  if (!(box_radius > 0.0)) throw std::invalid_argument("box radius must be positive");
  if (!(rho_min > 0.0) || !(rho_min < rho_max)) {
    throw std::invalid_argument("rho range must satisfy 0 < rho_min < rho_max");
  }
  if (grid.empty() || !(grid.front() > 0.0)) throw std::invalid_argument("ray grid must lie in (0, T]");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("ray grid must be strictly increasing");
}

int compare_with_band(double a, double b) {
  const double band = 1e-12 * (1.0 + std::max(std::fabs(a), std::fabs(b)));
  if (std::fabs(a - b) <= band) return 0;
  return a < b ? -1 : 1;
}

namespace {

struct SIChunk {
  std::size_t violations = 0;
  std::vector<SIWitness> witnesses;
};

void probe_triple(const ScalarField& f, const Vec& x, const Vec& y, double rho, SIChunk& acc) {
  const double fx = f.at_offset(x);
  const double fy = f.at_offset(y);
  const Vec rx = scaled(x, rho);
  const Vec ry = scaled(y, rho);
  const double frx = f.at_offset(rx);
  const double fry = f.at_offset(ry);
  std::string reason;
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(frx) || !std::isfinite(fry)) {
    reason = "non_finite";
  } else {
    const int before = compare_with_band(fx, fy);
    const int after = compare_with_band(frx, fry);
    // x ≤ y and y ≤ x must both be preserved, i.e. the three-way order.
    if (before != after) reason = "order_flip";
  }
  if (reason.empty()) return;
  ++acc.violations;
  if (acc.witnesses.size() < kMaxWitnesses) {
    acc.witnesses.push_back(SIWitness{x, y, rho, fx, fy, frx, fry, reason});
  }
}

}  // namespace

SIReport check_scaling_invariance(const ScalarField& field, const SamplingPlan& plan) {
  plan.validate();
  const std::size_t n = field.dim();
  SIChunk structured;
  for (std::size_t i = 0; i < n; ++i) {
    for (double a : {0.5, 1.0, 2.0}) {
      for (double rho : {4.0, 0.25, 2.0, 0.5}) {
        probe_triple(field, unit_vector(n, i, a), unit_vector(n, i, -a), rho, structured);
      }
    }
  }
  const std::size_t structured_trials = 12 * n;

  auto chunks = map_chunks<SIChunk>(plan.samples, plan.threads,
                                    [&](std::size_t c, std::size_t begin, std::size_t end) {
                                      Rng rng(derive_seed(plan.seed, 1, c));
                                      SIChunk acc;
                                      for (std::size_t k = begin; k < end; ++k) {
                                        Vec x = uniform_box(rng, n, plan.box_radius);
                                        Vec y = uniform_box(rng, n, plan.box_radius);
                                        const double rho = rng.log_uniform(plan.rho_min, plan.rho_max);
                                        probe_triple(field, x, y, rho, acc);
                                      }
                                      return acc;
                                    });

  SIReport report;
  report.seed = plan.seed;
  report.trials = structured_trials + plan.samples;
  auto merge = [&](SIChunk& c) {
    report.violations += c.violations;
    for (auto& w : c.witnesses) {
      if (report.witnesses.size() >= kMaxWitnesses) break;
      report.witnesses.push_back(std::move(w));
    }
  };
  merge(structured);
  for (auto& c : chunks) merge(c);
  report.pass = report.violations == 0;
  return report;
}

const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::constant: return "constant";
    case Monotonicity::increasing: return "strictly_increasing";
    case Monotonicity::decreasing: return "strictly_decreasing";
    case Monotonicity::non_monotone: return "non_monotone";
  }
  return "?";
}

const char* to_string(DecomposabilityVerdict v) {
  switch (v) {
    case DecomposabilityVerdict::decomposable: return "decomposable";
    case DecomposabilityVerdict::not_decomposable: return "not_decomposable";
    case DecomposabilityVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

MonotoneVerdict classify_ray(const ScalarField& field, std::span<const double> x, const Vec& grid) {
  if (grid.size() < 3) throw std::invalid_argument("ray grid needs at least 3 points");
  const RaySection ray = ray_section(field, x);
  MonotoneVerdict v;
  v.t.reserve(grid.size() + 1);
  v.t.push_back(0.0);
  v.t.insert(v.t.end(), grid.begin(), grid.end());
  v.values.reserve(v.t.size());
  for (double t : v.t) v.values.push_back(ray.eval(t));
  const std::size_t k = v.t.size() - 1;

  for (std::size_t i = 0; i <= k; ++i) {
    if (!std::isfinite(v.values[i])) {
      v.kind = Monotonicity::non_monotone;
      v.max_constancy_deviation = std::numeric_limits<double>::infinity();
      v.witness = std::pair{v.t[i == 0 ? 0 : i - 1], v.t[i]};
      return v;
    }
  }
  const double v0 = v.values[0];
  for (double y : v.values) v.max_constancy_deviation = std::max(v.max_constancy_deviation, std::fabs(y - v0));
  if (v.max_constancy_deviation <= 1e-10 * (1.0 + std::fabs(v0))) {
    v.kind = Monotonicity::constant;
    v.strict_end = k;
    return v;
  }

  constexpr double tol = 1e-10;
  std::vector<int> step(k + 1, 0);
  std::size_t first = 0, last = 0;
  for (std::size_t i = 1; i <= k; ++i) {
    const double d = v.values[i] - v.values[i - 1];
    step[i] = d > tol ? 1 : (d < -tol ? -1 : 0);
    if (step[i] != 0) {
      if (first == 0) first = i;
      last = i;
    }
  }

  if (first == 0) {
    // Total drift exceeds the constancy band but every step is tiny: decide
    // on raw signs.
    int sign = 0;
    for (std::size_t i = 1; i <= k; ++i) {
      const double d = v.values[i] - v.values[i - 1];
      const int s = (d > 0) - (d < 0);
      if (s == 0 || (sign != 0 && s != sign)) {
        v.kind = Monotonicity::non_monotone;
        v.witness = std::pair{v.t[i - 1], v.t[i]};
        return v;
      }
      sign = s;
    }
    v.kind = sign > 0 ? Monotonicity::increasing : Monotonicity::decreasing;
    v.strict_end = k;
    return v;
  }

  const int sign = step[first];
  for (std::size_t i = first; i <= last; ++i) {
    if (step[i] != sign) {
      v.kind = Monotonicity::non_monotone;
      v.witness = std::pair{v.t[i - 1], v.t[i]};
      return v;
    }
  }
  v.kind = sign > 0 ? Monotonicity::increasing : Monotonicity::decreasing;
  v.strict_begin = first - 1;
  v.strict_end = last;
  if (first > 1) v.flat_until = v.t[first - 1];
  if (last < k) v.saturated_from = v.t[last];
  return v;
}

std::vector<Vec> default_directions(std::size_t n, std::uint64_t seed) {
  std::vector<Vec> dirs;
  for (std::size_t i = 0; i < n; ++i) {
    dirs.push_back(unit_vector(n, i, 1.0));
    dirs.push_back(unit_vector(n, i, -1.0));
  }
  Rng rng(derive_seed(seed, 2, 0));
  for (std::size_t i = 0; i < 2 * n; ++i) dirs.push_back(uniform_sphere(rng, n));
  return dirs;
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
};

Range positive_range(const MonotoneVerdict& v) {
  Range r;
  for (std::size_t i = 1; i < v.values.size(); ++i) {
    r.lo = std::min(r.lo, v.values[i]);
    r.hi = std::max(r.hi, v.values[i]);
  }
  return r;
}

// Values reachable far outside the grid, to rule out a gap that only exists
// because the grid is too short.
Range extended_range(const RaySection& ray, const MonotoneVerdict& v) {
  Range r = positive_range(v);
  const double t_small = v.t[1];
  const double t_big = v.t.back();
  for (int k = 1; k <= 30; ++k) {
    for (double t : {t_big * std::ldexp(1.0, k), t_small * std::ldexp(1.0, -k)}) {
      const double y = ray.eval(t);
      if (std::isnan(y)) continue;
      r.lo = std::min(r.lo, y);
      r.hi = std::max(r.hi, y);
    }
  }
  return r;
}

// t on the ray with ray(t) = target, assuming the grid values straddle it.
std::optional<double> solve_on_ray(const RaySection& ray, const MonotoneVerdict& v, double target) {
  for (std::size_t j = 1; j < v.values.size(); ++j) {
    const double a = v.values[j - 1] - target;
    const double b = v.values[j] - target;
    if (a == 0.0) return v.t[j - 1];
    if (b == 0.0) return v.t[j];
    if ((a < 0.0) != (b < 0.0)) {
      double lo = v.t[j - 1], hi = v.t[j];
      const bool rising = b > a;
      for (int it = 0; it < 200; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double m = ray.eval(mid) - target;
        if (!std::isfinite(m)) return std::nullopt;
        if (m == 0.0) return mid;
        if ((m < 0.0) == rising) lo = mid;
        else hi = mid;
      }
      return lo + 0.5 * (hi - lo);
    }
  }
  return std::nullopt;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Compares ray b against ray a: finds c with b(c·t) = a(t) at one value and
// checks it on the rest of a's grid.
std::optional<DecomposabilityWitness> match_rays(const ScalarField& field, const std::vector<Vec>& dirs,
                                                 const std::vector<MonotoneVerdict>& rays, std::size_t ia,
                                                 std::size_t ib, bool& unresolved) {
  const MonotoneVerdict& A = rays[ia];
  const MonotoneVerdict& B = rays[ib];
  const RaySection ray_a = ray_section(field, dirs[ia]);
  const RaySection ray_b = ray_section(field, dirs[ib]);
  const Range ra = positive_range(A);
  const Range rb = positive_range(B);

  DecomposabilityWitness w;
  w.ray_a = ia;
  w.ray_b = ib;
  w.dir_a = dirs[ia];
  w.dir_b = dirs[ib];
  w.lo_a = ra.lo;
  w.hi_a = ra.hi;
  w.lo_b = rb.lo;
  w.hi_b = rb.hi;

  if (ra.hi < rb.lo || rb.hi < ra.lo) {
    const bool a_lower = ra.hi < rb.lo;
    const Range ea = extended_range(ray_a, A);
    const Range eb = extended_range(ray_b, B);
    const bool still_disjoint = a_lower ? ea.hi < eb.lo : eb.hi < ea.lo;
    if (!still_disjoint) {
      unresolved = true;
      return std::nullopt;
    }
    w.kind = "disjoint_image";
    w.detail = "grid ranges [" + fmt(ra.lo) + ", " + fmt(ra.hi) + "] and [" + fmt(rb.lo) + ", " +
               fmt(rb.hi) + "] stay disjoint after extending t by 2^±30 (extended [" + fmt(ea.lo) +
               ", " + fmt(ea.hi) + "] vs [" + fmt(eb.lo) + ", " + fmt(eb.hi) + "])";
    return w;
  }

  // Match at the steepest grid point of a that lies strictly inside b's range.
  std::optional<std::size_t> best;
  double best_slope = -1.0;
  const std::size_t k = A.t.size() - 1;
  for (std::size_t i = std::max<std::size_t>(1, A.strict_begin); i <= A.strict_end; ++i) {
    const double y = A.values[i];
    if (!(y > rb.lo && y < rb.hi)) continue;
    const double slope = std::fabs(A.values[std::min(i + 1, k)] - A.values[i - 1]);
    if (slope > best_slope) {
      best_slope = slope;
      best = i;
    }
  }
  double t_a = 0.0, target = 0.0;
  if (best) {
    t_a = A.t[*best];
    target = A.values[*best];
  } else {
    target = 0.5 * (std::max(ra.lo, rb.lo) + std::min(ra.hi, rb.hi));
    auto s = solve_on_ray(ray_a, A, target);
    if (!s || *s <= 0.0) {
      unresolved = true;
      return std::nullopt;
    }
    t_a = *s;
  }
  const auto t_b = solve_on_ray(ray_b, B, target);
  if (!t_b || *t_b <= 0.0) {
    unresolved = true;
    return std::nullopt;
  }
  const double c = *t_b / t_a;
  const double t_max = B.t.back();
  for (std::size_t i = 1; i <= k; ++i) {
    const double tb = c * A.t[i];
    if (tb > t_max) break;
    const double ya = A.values[i];
    const double yb = ray_b.eval(tb);
    const double local = std::fabs(A.values[std::min(i + 1, k)] - A.values[i - 1]);
    const double tol = 1e-6 * local + 1e-9 * (1.0 + std::fabs(ya));
    if (!(std::fabs(ya - yb) <= tol)) {
      w.kind = "scale_inconsistent";
      w.t_pair = std::pair{A.t[i], tb};
      w.detail = "rays agree at value " + fmt(target) + " with scale c = " + fmt(c) + " but f_a(" +
                 fmt(A.t[i]) + ") = " + fmt(ya) + " while f_b(c*t) = " + fmt(yb);
      return w;
    }
  }
  return std::nullopt;
}

}  // namespace

DecomposabilityReport check_decomposability(const ScalarField& field, const std::vector<Vec>& directions,
                                            const Vec& grid) {
  if (directions.size() < 2) throw std::invalid_argument("decomposability check needs at least 2 directions");
  DecomposabilityReport r;
  r.scale = grid.empty() ? 0.0 : grid.back();
  for (const auto& d : directions) r.rays.push_back(classify_ray(field, d, grid));

  std::vector<std::size_t> inc, dec;
  for (std::size_t i = 0; i < r.rays.size(); ++i) {
    const auto& v = r.rays[i];
    switch (v.kind) {
      case Monotonicity::constant: ++r.constant; break;
      case Monotonicity::increasing: ++r.increasing; inc.push_back(i); break;
      case Monotonicity::decreasing: ++r.decreasing; dec.push_back(i); break;
      case Monotonicity::non_monotone: {
        ++r.non_monotone;
        if (r.witnesses.size() < kMaxWitnesses) {
          DecomposabilityWitness w;
          w.kind = "non_monotone";
          w.ray_a = w.ray_b = i;
          w.dir_a = w.dir_b = directions[i];
          w.t_pair = v.witness;
          w.detail = "ray is neither constant nor strictly monotone on the grid";
          r.witnesses.push_back(std::move(w));
        }
        break;
      }
    }
  }
  if (r.non_monotone > 0) {
    r.verdict = DecomposabilityVerdict::not_decomposable;
    r.note = "some ray is neither constant nor strictly monotone";
    return r;
  }

  bool unresolved = false;
  for (const auto* group : {&inc, &dec}) {
    for (std::size_t j = 1; j < group->size(); ++j) {
      const std::size_t pivot = (*group)[0], other = (*group)[j];
      for (auto [a, b] : {std::pair{pivot, other}, std::pair{other, pivot}}) {
        auto w = match_rays(field, directions, r.rays, a, b, unresolved);
        if (w && r.witnesses.size() < kMaxWitnesses) r.witnesses.push_back(std::move(*w));
        if (w) break;
      }
    }
  }
  if (!r.witnesses.empty()) {
    r.verdict = DecomposabilityVerdict::not_decomposable;
    r.note = "rays of equal monotonicity are not rescalings of one another";
  } else if (unresolved) {
    r.verdict = DecomposabilityVerdict::inconclusive;
    r.note = "some ray pair could not be matched at scale T = " + fmt(r.scale);
  } else {
    r.verdict = DecomposabilityVerdict::decomposable;
    r.note = "decomposable at scale T = " + fmt(r.scale) +
             ": finite-scale evidence that monotone rays share their images, not a proof";
  }
  return r;
}

}  // namespace siph
