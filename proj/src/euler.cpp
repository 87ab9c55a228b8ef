#include "siph/euler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "siph/levelset.hpp"
#include "siph/parallel.hpp"

namespace siph {

namespace {

Vec draw_offset(Rng& rng, std::size_t n, double R, const EulerOptions& opts) {
  for (;;) {
    Vec z = uniform_box(rng, n, R);
    if (std::sqrt(norm2(z)) < opts.min_radius_fraction * R) continue;
    bool near_axis = false;
    for (double v : z) near_axis = near_axis || std::fabs(v) < opts.axis_margin;
    if (!near_axis) return z;
  }
}

Vec absolute(const ScalarField& f, const Vec& z) {
  Vec x = z;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += f.reference()[i];
  return x;
}

struct EulerChunk {
  std::vector<double> residuals;
  std::vector<Vec> points;
  std::size_t excluded = 0;
};

EulerReport collect(std::vector<EulerChunk>& chunks, const GradientSpec& spec, double alpha) {
  EulerReport rep;
  rep.spec = spec;
  rep.alpha = alpha;
  for (auto& c : chunks) {
    rep.excluded += c.excluded;
    for (std::size_t i = 0; i < c.residuals.size(); ++i) {
      const double r = c.residuals[i];
      if (!(r <= rep.max_residual)) {
        rep.max_residual = r;
        rep.worst_point = c.points[i];
      }
      rep.residuals.push_back(r);
    }
  }
  return rep;
}

}  // namespace

EulerReport euler_residual(const ScalarField& p, double alpha, const SamplingPlan& plan,
                           const GradientSpec& spec, const EulerOptions& opts) {
  plan.validate();
  const std::size_t n = p.dim();
  auto chunks = map_chunks<EulerChunk>(plan.samples, plan.threads,
                                       [&](std::size_t c, std::size_t begin, std::size_t end) {
                                         Rng rng(derive_seed(plan.seed, 12, c));
                                         EulerChunk acc;
                                         for (std::size_t k = begin; k < end; ++k) {
                                           const Vec z = draw_offset(rng, n, plan.box_radius, opts);
                                           const Vec x = absolute(p, z);
                                           const Vec g = gradient(p, x, spec);
                                           acc.residuals.push_back(std::fabs(alpha * p.centered(z) - dot(g, z)));
                                           acc.points.push_back(x);
                                         }
                                         return acc;
                                       });
  return collect(chunks, spec, alpha);
}

GeneralEulerPoint general_euler_at(const ScalarField& f, const Decomposition& d, std::span<const double> x,
                                   const GradientSpec& spec, double phi_step) {
  const std::size_t n = f.dim();
  Vec z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - f.reference()[i];
  GeneralEulerPoint out;
  out.lhs = dot(gradient(f, x, spec), z);
  const double pv = d.p(x);
  if (pv == 0.0) return out;
  const double k = phi_step * std::fabs(pv);
  const double dphi = (d.phi(pv + k) - d.phi(pv - k)) / (2.0 * k);
  out.rhs = d.alpha() * dphi * pv;
  return out;
}

EulerReport general_euler_residual(const ScalarField& f, const Decomposition& d, const SamplingPlan& plan,
                                   const GradientSpec& spec, double phi_step) {
  plan.validate();
  const std::size_t n = f.dim();
  double max_p = 0.0;
  {
    std::vector<Vec> dirs = default_directions(n, plan.seed);
    for (const auto& u : dirs) {
      const double v = std::fabs(d.p(absolute(f, u)));
      if (std::isfinite(v)) max_p = std::max(max_p, v);
    }
  }
  const double cutoff = 0.01 * max_p;
  const EulerOptions opts{};
  auto chunks = map_chunks<EulerChunk>(
      plan.samples, plan.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Rng rng(derive_seed(plan.seed, 13, c));
        EulerChunk acc;
        for (std::size_t k = begin; k < end; ++k) {
          const Vec z = draw_offset(rng, n, plan.box_radius, opts);
          const Vec x = absolute(f, z);
          const double pv = d.p(x);
          if (!std::isfinite(pv) || std::fabs(pv) < cutoff) {
            ++acc.excluded;
            continue;
          }
          const GeneralEulerPoint g = general_euler_at(f, d, x, spec, phi_step);
          acc.residuals.push_back(std::fabs(g.lhs - g.rhs));
          acc.points.push_back(x);
        }
        return acc;
      });
  return collect(chunks, spec, d.alpha());
}

LevelGradientReport levelset_gradient_constancy(const ScalarField& f, double c, std::size_t n_points,
                                                const GradientSpec& spec, std::uint64_t seed, double tol) {
  LevelGradientReport rep;
  rep.level = c;
  rep.tolerance = tol;
  const std::size_t n = f.dim();
  Rng rng(derive_seed(seed, 14, 0));
  for (std::size_t i = 0; i < n_points; ++i) {
    const Vec d = uniform_sphere(rng, n);
    LevelRadius lr;
    try {
      lr = ray_level_radius(f, d, c);
    } catch (const std::invalid_argument&) {
      ++rep.skipped;
      continue;
    }
    if (lr.status != RadiusStatus::found) {
      ++rep.skipped;
      continue;
    }
    const Vec z = scaled(d, lr.radius);
    rep.values.push_back(dot(gradient(f, absolute(f, z), spec), z));
    rep.points.push_back(z);
  }
  if (rep.values.empty()) {
    rep.pass = false;
    return rep;
  }
  rep.min_value = *std::min_element(rep.values.begin(), rep.values.end());
  rep.max_value = *std::max_element(rep.values.begin(), rep.values.end());
  rep.spread = rep.max_value - rep.min_value;
  rep.pass = rep.spread <= tol;
  return rep;
}

PairedLevel paired_level_solver(double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("paired level: r must lie in (0, 1)");
  auto h = [](double u) { return u * std::exp(-u); };
  const double u_r = r * r;
  const double target = h(u_r);
  // h decreases on (1, ∞); find B with h(B) < target, then bisect on u = s².
  double lo = 1.0, hi = 2.0;
  while (h(hi) >= target) {
    lo = hi;
    hi *= 2.0;
  }
  PairedLevel out;
  out.r = r;
  for (; out.iterations < 2000; ++out.iterations) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (h(mid) > target) lo = mid;
    else hi = mid;
  }
  const double u = std::fabs(h(lo) - target) <= std::fabs(h(hi) - target) ? lo : hi;
  out.s = std::sqrt(u);
  out.residual = target - h(out.s * out.s);
  return out;
}

SaddleReport saddle_levels(const ScalarField& f, int k_max, double tol, std::size_t points_per_shell,
                           std::uint64_t seed) {
  if (f.name() != "saddle_si") throw std::invalid_argument("saddle_levels needs the saddle_si field");
  if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
  SaddleReport rep;
  rep.tolerance = tol;
  const std::size_t n = f.dim();
  Rng rng(derive_seed(seed, 15, 0));
  std::vector<Vec> dirs;
  for (std::size_t i = 0; i < points_per_shell; ++i) dirs.push_back(uniform_sphere(rng, n));
  for (int k = 1; k <= k_max; ++k) {
    SaddleShell shell;
    shell.k = k;
    shell.radius = std::sqrt(k * std::numbers::pi);
    for (const auto& u : dirs) {
      const Vec g = gradient(f, absolute(f, scaled(u, shell.radius)));
      shell.max_grad_norm = std::max(shell.max_grad_norm, std::sqrt(norm2(g)));
    }
    shell.pass = shell.max_grad_norm <= tol;
    rep.pass = rep.pass && shell.pass;
    rep.shells.push_back(shell);
  }
  const Vec grid = uniform_grid(std::sqrt((k_max + 1) * std::numbers::pi), 100);
  for (const auto& u : dirs) {
    ++rep.rays_checked;
    if (classify_ray(f, u, grid).kind != Monotonicity::increasing) {
      rep.rays_increasing = false;
      if (!rep.non_increasing_direction) rep.non_increasing_direction = u;
    }
  }
  rep.pass = rep.pass && rep.rays_increasing;
  return rep;
}

NeighborhoodCertificate positive_gradient_region(const ScalarField& f, const CertificateOptions& opts) {
  NeighborhoodCertificate cert;
  const std::size_t n = f.dim();
  const SphereExtrema ext = sphere_extrema(f, 64 * n, 12, opts.seed);
  cert.s = ext.argmin;

  auto directional = [&](double t) {
    const Vec x = absolute(f, scaled(cert.s, t));
    return dot(gradient(f, x, opts.spec), cert.s);
  };
  // Scan from the unit sphere inward; a positive derivative rules out the
  // saddle shells, where it vanishes.
  double chosen = 0.0;
  for (int j = 0; j < opts.scan_steps; ++j) {
    const double t = 1.0 - static_cast<double>(j) / opts.scan_steps;
    const double der = directional(t);
    cert.scan.push_back({t, der});
    if (der > 1e-6 * (1.0 + std::fabs(f.at_offset(scaled(cert.s, t))))) {
      chosen = t;
      break;
    }
  }
  if (chosen == 0.0) {
    cert.failure = "no t in (0, 1] with positive radial derivative";
    return cert;
  }
  cert.t0 = chosen;
  cert.z0 = scaled(cert.s, chosen);
  cert.level = f.at_offset(cert.z0);

  Rng rng(derive_seed(opts.seed, 16, 0));
  std::vector<Vec> level;
  cert.epsilon = std::numeric_limits<double>::infinity();
  cert.level_radius_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < opts.level_points; ++i) {
    const Vec d = uniform_sphere(rng, n);
    LevelRadius lr;
    try {
      lr = ray_level_radius(f, d, cert.level);
    } catch (const std::invalid_argument&) {
      ++cert.skipped;
      continue;
    }
    if (lr.status != RadiusStatus::found) {
      ++cert.skipped;
      continue;
    }
    Vec z = scaled(d, lr.radius);
    cert.epsilon = std::min(cert.epsilon, dot(gradient(f, absolute(f, z), opts.spec), z));
    cert.level_radius_min = std::min(cert.level_radius_min, lr.radius);
    cert.level_radius_max = std::max(cert.level_radius_max, lr.radius);
    level.push_back(std::move(z));
  }
  cert.level_samples = level.size();
  if (level.empty() || !(cert.epsilon > 0.0)) {
    cert.failure = level.empty() ? "level set could not be sampled"
                                 : "grad f(z).z is not positive on the sampled level set";
    if (level.empty()) cert.epsilon = 0.0;
    return cert;
  }

  bool margin_open = true;
  double delta = opts.delta_start;
  cert.stop_reason = "cap";
  for (;;) {
    const double trial = std::min(delta, opts.delta_cap);
    Rng prng(derive_seed(opts.seed, 17, static_cast<std::uint64_t>(std::llround(std::log2(trial / opts.delta_start) * 16))));
    bool positive = true, margin = true;
    for (const auto& z : level) {
      for (std::size_t j = 0; j < opts.perturbations; ++j) {
        // Alternate interior points with points on the boundary sphere.
        Vec w = j % 2 == 0 ? scaled(uniform_sphere(prng, n), trial) : uniform_ball(prng, n, trial);
        for (std::size_t i = 0; i < n; ++i) w[i] += z[i];
        const double v = dot(gradient(f, absolute(f, w), opts.spec), w);
        ++cert.fattened_samples;
        if (!(v > 0.0)) positive = false;
        if (!(v >= 0.5 * cert.epsilon)) margin = false;
      }
    }
    if (margin && margin_open) cert.delta_margin = trial;
    if (!margin) margin_open = false;
    if (!positive) {
      cert.stop_reason = "violation";
      break;
    }
    cert.delta = trial;
    if (trial >= opts.delta_cap) break;
    delta *= 2.0;
  }
  cert.found = cert.delta > 0.0;
  if (!cert.found) cert.failure = "no delta keeps grad f(z).z positive";
  return cert;
}

}  // namespace siph
