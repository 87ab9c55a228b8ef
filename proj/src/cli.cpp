#include "siph/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "siph/decomposition.hpp"
#include "siph/euler.hpp"
#include "siph/expr.hpp"
#include "siph/gallery.hpp"
#include "siph/levelset.hpp"
#include "siph/ray_analysis.hpp"
#include "siph/report.hpp"

namespace siph::cli {

namespace {

// Thrown for bad flag values that CLI11 cannot catch itself.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Options {
  std::string gallery, expr, phi;
  std::size_t n = 2;
  std::vector<std::string> params;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  unsigned threads = 0;
  std::string out = "-";
  std::string format = "json";
  double box = 0.0;
  double rho_min = 0.5, rho_max = 2.0;
  double T = 10.0;
  std::size_t grid_points = 64;
  double tol = 0.0;
  double alpha = 0.0;
  std::string x0, x_pos, x_neg, ref2_x0, ref2_x_pos, ref2_x_neg;
  std::string orientation = "increasing";
  double h = 1e-5;
  bool fd = false;
  double axis_margin = 0.0;
  double phi_step = 1e-4;
  double level = 0.0;
  bool level_set = false;
  std::size_t points = 64;
  std::string eps = "0.1,0.05";
  double kappa = 10.0;
  double r = 0.0;
  std::size_t level_points = 256;
  double delta_cap = 0.5;
};

Json vec_json(std::span<const double> v) { return Json(std::vector<double>(v.begin(), v.end())); }

Vec parse_list(const std::string& text, const std::string& what) {
  Vec out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

Params parse_params(const std::vector<std::string>& raw) {
  Params p;
  for (const auto& item : raw) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=v1,v2,..., got '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (p.count(key)) throw UsageError("--param '" + key + "' given twice");
    p[key] = parse_list(item.substr(eq + 1), "--param " + key);
  }
  return p;
}

struct Context {
  Options o;
  std::string command;
  Report report;
  std::optional<ScalarField> field;

  SamplingPlan plan(std::size_t default_samples, double default_box = 1.0) const {
    SamplingPlan p;
    p.seed = o.seed;
    p.samples = o.samples ? o.samples : default_samples;
    p.box_radius = o.box > 0.0 ? o.box : default_box;
    p.rho_min = o.rho_min;
    p.rho_max = o.rho_max;
    p.grid = uniform_grid(o.T, o.grid_points);
    p.threads = o.threads;
    p.validate();
    return p;
  }
  double tol(double fallback) const { return o.tol > 0.0 ? o.tol : fallback; }

  void echo_plan(const SamplingPlan& p) {
    report.config["seed"] = p.seed;
    report.config["samples"] = p.samples;
    report.config["box_radius"] = p.box_radius;
    report.config["rho_range"] = {p.rho_min, p.rho_max};
  }
  void echo_grid() {
    report.config["grid_T"] = o.T;
    report.config["grid_points"] = o.grid_points;
  }
  const ScalarField& f() const { return *field; }
};

void resolve_field(Context& ctx) {
  const Options& o = ctx.o;
  if (o.gallery.empty() == o.expr.empty()) throw UsageError("give exactly one of --gallery or --expr");
  if (o.n == 0) throw UsageError("--n must be positive");
  Json fn;
  if (!o.gallery.empty()) {
    const Params params = parse_params(o.params);
    ctx.field = make_builtin(o.gallery, o.n, params);
    fn["source"] = "gallery";
    fn["name"] = o.gallery;
    Json pj = Json::object();
    for (const auto& [k, v] : params) pj[k] = v;
    fn["params"] = pj;
  } else {
    if (!o.params.empty()) throw UsageError("--param only applies to gallery fields");
    ctx.field = expr::bind(expr::parse(o.expr), o.n, o.expr);
    fn["source"] = "expr";
    fn["expr"] = o.expr;
  }
  fn["n"] = o.n;
  if (!o.phi.empty()) {
    ctx.field = compose(MonotoneTransform::parse(o.phi), *ctx.field);
    fn["phi"] = o.phi;
  }
  ctx.report.config["function"] = fn;
}

std::string pass_fail(bool pass) { return pass ? "pass" : "fail"; }

// ----------------------------------------------------------------- commands

void cmd_gallery_list(Context& ctx) {
  ctx.report.metrics["entries"] = gallery_json();
  ctx.report.verdict = "pass";
}

void cmd_check_si(Context& ctx) {
  const SamplingPlan plan = ctx.plan(10000);
  ctx.echo_plan(plan);
  const SIReport r = check_scaling_invariance(ctx.f(), plan);
  auto& m = ctx.report.metrics;
  m["trials"] = r.trials;
  m["violations"] = r.violations;
  for (const auto& w : r.witnesses) {
    Json j;
    j["kind"] = w.reason;
    j["x"] = vec_json(w.x);
    j["y"] = vec_json(w.y);
    j["rho"] = w.rho;
    j["f_x"] = w.fx;
    j["f_y"] = w.fy;
    j["f_rho_x"] = w.frx;
    j["f_rho_y"] = w.fry;
    ctx.report.witnesses.push_back(j);
  }
  ctx.report.verdict = pass_fail(r.pass);
}

void cmd_check_decomposable(Context& ctx) {
  ctx.report.config["seed"] = ctx.o.seed;
  ctx.echo_grid();
  const auto dirs = default_directions(ctx.f().dim(), ctx.o.seed);
  const auto r = check_decomposability(ctx.f(), dirs, uniform_grid(ctx.o.T, ctx.o.grid_points));
  auto& m = ctx.report.metrics;
  m["decomposability"] = to_string(r.verdict);
  m["scale_T"] = r.scale;
  m["directions"] = dirs.size();
  m["increasing"] = r.increasing;
  m["decreasing"] = r.decreasing;
  m["constant"] = r.constant;
  m["non_monotone"] = r.non_monotone;
  m["note"] = r.note;
  for (const auto& w : r.witnesses) {
    Json j;
    j["kind"] = w.kind;
    j["ray_a"] = w.ray_a;
    j["ray_b"] = w.ray_b;
    j["dir_a"] = vec_json(w.dir_a);
    j["dir_b"] = vec_json(w.dir_b);
    j["range_a"] = {w.lo_a, w.hi_a};
    j["range_b"] = {w.lo_b, w.hi_b};
    if (w.t_pair) j["t_pair"] = {w.t_pair->first, w.t_pair->second};
    j["detail"] = w.detail;
    ctx.report.witnesses.push_back(j);
  }
  switch (r.verdict) {
    case DecomposabilityVerdict::decomposable: ctx.report.verdict = "pass"; break;
    case DecomposabilityVerdict::not_decomposable: ctx.report.verdict = "fail"; break;
    case DecomposabilityVerdict::inconclusive:
      ctx.report.verdict = "inconclusive";
      ctx.report.witnesses.push_back({{"kind", "inconclusive"}, {"detail", r.note}});
      break;
  }
}

Orientation parse_orientation(const std::string& s) {
  if (s == "increasing") return Orientation::increasing;
  if (s == "positive_p") return Orientation::positive_p;
  throw UsageError("--orientation must be increasing or positive_p");
}

DecompositionOptions decomposition_options(const Context& ctx, const std::string& x0,
                                           const std::string& xp, const std::string& xn) {
  DecompositionOptions d;
  d.alpha = ctx.o.alpha > 0.0 ? ctx.o.alpha : 1.0;
  d.orientation = parse_orientation(ctx.o.orientation);
  d.seed = ctx.o.seed;
  if (!x0.empty()) d.x0 = parse_list(x0, "x0");
  if (!xp.empty()) d.x_pos = parse_list(xp, "x_pos");
  if (!xn.empty()) d.x_neg = parse_list(xn, "x_neg");
  return d;
}

Json decomposition_json(const Decomposition& d) {
  Json j;
  j["case"] = to_string(d.kind());
  j["alpha"] = d.alpha();
  j["orientation"] = d.orientation() == Orientation::increasing ? "increasing" : "positive_p";
  j["reference"] = vec_json(d.reference());
  j["reference_value"] = d.reference_value();
  if (d.x0()) j["x0"] = vec_json(*d.x0());
  if (d.x_pos()) j["x_pos"] = vec_json(*d.x_pos());
  if (d.x_neg()) j["x_neg"] = vec_json(*d.x_neg());
  return j;
}

void cmd_decompose(Context& ctx) {
  const SamplingPlan plan = ctx.plan(1000);
  ctx.echo_plan(plan);
  const double tol = ctx.tol(1e-7);
  ctx.report.config["tol"] = tol;
  ctx.report.config["orientation"] = ctx.o.orientation;
  const Decomposition d = build_decomposition(ctx.f(), decomposition_options(ctx, ctx.o.x0, ctx.o.x_pos, ctx.o.x_neg));
  ctx.report.config["alpha"] = d.alpha();
  auto& m = ctx.report.metrics;
  auto& W = ctx.report.witnesses;
  m["decomposition"] = decomposition_json(d);

  const DecompositionResiduals res = verify_decomposition(ctx.f(), d, plan);
  m["max_value_residual"] = res.max_value_residual;
  m["max_ph_residual"] = res.max_ph_residual;
  m["max_ph_residual_normalized"] = res.max_ph_residual_normalized;
  m["p_failures"] = res.failures;
  bool pass = true;
  if (!(res.max_value_residual <= tol)) {
    pass = false;
    W.push_back({{"kind", "value_residual"}, {"x", vec_json(res.worst_value_point)}, {"residual", res.max_value_residual}});
  }
  if (!(res.max_ph_residual_normalized <= tol)) {
    pass = false;
    W.push_back({{"kind", "ph_residual"}, {"x", vec_json(res.worst_ph_point)}, {"rho", res.worst_ph_rho},
                 {"residual", res.max_ph_residual_normalized}});
  }
  if (res.failures > 0) {
    pass = false;
    W.push_back({{"kind", "bracket_failure"}, {"count", res.failures},
                 {"detail", "p could not be evaluated: the ray never reaches the reference level"}});
  }

  // Under positive_p a decreasing φ reverses the order, so f is compared with -p.
  ScalarField p_order = d.p_field();
  const bool reversed = d.kind() == DecompositionCase::one_sided && d.orientation() == Orientation::positive_p &&
                        d.phi(1.0) < 0.0;
  if (reversed) {
    const ScalarField p = d.p_field();
    p_order = ScalarField(
        p.dim(), [p](std::span<const double> x) { return -p(x); }, p.info(), {}, p.reference());
  }
  const OrderEquivalenceReport order = order_equivalence(ctx.f(), p_order, plan);
  m["order_reversed"] = reversed;
  m["order_trials"] = order.trials;
  m["order_disagreements"] = order.disagreements;
  for (const auto& w : order.witnesses) {
    W.push_back({{"kind", "order_disagreement"}, {"x", vec_json(w.x)}, {"y", vec_json(w.y)},
                 {"f_x", w.fx}, {"f_y", w.fy}, {"p_x", w.px}, {"p_y", w.py}});
  }
  pass = pass && order.pass;

  SamplingPlan cplan = plan;
  cplan.samples = std::min<std::size_t>(plan.samples, 200);
  const ContinuityReport cont = continuity_probe(ctx.f(), d, cplan);
  m["continuity"] = {{"skipped", cont.skipped}, {"samples", cont.samples}, {"violations", cont.violations},
                     {"max_ratio", cont.max_ratio}};
  for (const auto& x : cont.witnesses) W.push_back({{"kind", "continuity"}, {"x", vec_json(x)}});
  pass = pass && cont.pass;

  if (!ctx.o.ref2_x0.empty() || !ctx.o.ref2_x_pos.empty() || !ctx.o.ref2_x_neg.empty()) {
    const Decomposition d2 = build_decomposition(
        ctx.f(), decomposition_options(ctx, ctx.o.ref2_x0, ctx.o.ref2_x_pos, ctx.o.ref2_x_neg));
    const double utol = 1e-6;
    const UniquenessReport u = uniqueness_check(ctx.f(), d, d2, plan, utol);
    Json classes = Json::array();
    for (const auto& c : u.classes) {
      classes.push_back({{"class", c.label}, {"count", c.count}, {"mean_ratio", c.mean}, {"cv", c.cv},
                         {"min", c.min}, {"max", c.max}});
      if (!(c.cv <= utol)) W.push_back({{"kind", "ratio_not_constant"}, {"class", c.label}, {"cv", c.cv}});
    }
    m["uniqueness"] = {{"second", decomposition_json(d2)}, {"tolerance", utol}, {"classes", classes}};
    if (u.classes.empty()) W.push_back({{"kind", "no_ratio_samples"}});
    pass = pass && u.pass;
  }
  ctx.report.verdict = pass_fail(pass);
}

GradientSpec gradient_spec(const Context& ctx) {
  if (!(ctx.o.h > 0.0)) throw UsageError("--h must be positive");
  return GradientSpec{ctx.o.h, !ctx.o.fd};
}

void cmd_verify_euler(Context& ctx) {
  const SamplingPlan plan = ctx.plan(1000);
  ctx.echo_plan(plan);
  double alpha = ctx.o.alpha;
  if (!(alpha > 0.0)) {
    if (!ctx.f().info().ph_degree) throw UsageError("field has no declared degree; pass --alpha");
    alpha = *ctx.f().info().ph_degree;
  }
  const double tol = ctx.tol(1e-6);
  const GradientSpec spec = gradient_spec(ctx);
  ctx.report.config["alpha"] = alpha;
  ctx.report.config["h"] = spec.step;
  ctx.report.config["finite_differences"] = !spec.prefer_analytic || !ctx.f().has_gradient();
  ctx.report.config["axis_margin"] = ctx.o.axis_margin;
  ctx.report.config["tol"] = tol;
  EulerOptions eo;
  eo.axis_margin = ctx.o.axis_margin;
  const EulerReport r = euler_residual(ctx.f(), alpha, plan, spec, eo);
  ctx.report.metrics["max_residual"] = r.max_residual;
  ctx.report.metrics["samples"] = r.residuals.size();
  const bool pass = r.max_residual <= tol;
  if (!pass) ctx.report.witnesses.push_back({{"kind", "residual"}, {"x", vec_json(r.worst_point)}, {"residual", r.max_residual}});
  ctx.report.verdict = pass_fail(pass);
}

void cmd_verify_general_euler(Context& ctx) {
  const SamplingPlan plan = ctx.plan(1000);
  ctx.echo_plan(plan);
  const double tol = ctx.tol(1e-5);
  const GradientSpec spec = gradient_spec(ctx);
  ctx.report.config["h"] = spec.step;
  ctx.report.config["phi_step"] = ctx.o.phi_step;
  ctx.report.config["orientation"] = ctx.o.orientation;
  ctx.report.config["tol"] = tol;
  const Decomposition d = build_decomposition(ctx.f(), decomposition_options(ctx, ctx.o.x0, ctx.o.x_pos, ctx.o.x_neg));
  ctx.report.config["alpha"] = d.alpha();
  const EulerReport r = general_euler_residual(ctx.f(), d, plan, spec, ctx.o.phi_step);
  ctx.report.metrics["decomposition"] = decomposition_json(d);
  ctx.report.metrics["max_residual"] = r.max_residual;
  ctx.report.metrics["samples"] = r.residuals.size();
  ctx.report.metrics["excluded_near_zero"] = r.excluded;
  const bool pass = !r.residuals.empty() && r.max_residual <= tol;
  if (!pass) {
    ctx.report.witnesses.push_back({{"kind", r.residuals.empty() ? "no_samples" : "residual"},
                                    {"x", vec_json(r.worst_point)}, {"residual", r.max_residual}});
  }
  ctx.report.verdict = pass_fail(pass);
}

double require_level(const Context& ctx) {
  if (!ctx.o.level_set) throw UsageError("--level is required");
  return ctx.o.level;
}

void cmd_verify_levelset_grad(Context& ctx) {
  const double c = require_level(ctx);
  const double tol = ctx.tol(1e-6);
  const GradientSpec spec = gradient_spec(ctx);
  ctx.report.config["seed"] = ctx.o.seed;
  ctx.report.config["level"] = c;
  ctx.report.config["points"] = ctx.o.points;
  ctx.report.config["h"] = spec.step;
  ctx.report.config["tol"] = tol;
  const LevelGradientReport r = levelset_gradient_constancy(ctx.f(), c, ctx.o.points, spec, ctx.o.seed, tol);
  auto& m = ctx.report.metrics;
  m["count"] = r.values.size();
  m["skipped"] = r.skipped;
  m["min"] = r.min_value;
  m["max"] = r.max_value;
  m["spread"] = r.spread;
  if (!r.pass) {
    if (r.values.empty()) {
      ctx.report.witnesses.push_back({{"kind", "no_level_points"}, {"skipped", r.skipped}});
    } else {
      const auto imin = std::min_element(r.values.begin(), r.values.end()) - r.values.begin();
      const auto imax = std::max_element(r.values.begin(), r.values.end()) - r.values.begin();
      ctx.report.witnesses.push_back({{"kind", "spread"},
                                      {"z_min", vec_json(r.points[imin])},
                                      {"z_max", vec_json(r.points[imax])},
                                      {"spread", r.spread}});
    }
  }
  ctx.report.verdict = pass_fail(r.pass);
}

Json angles(std::span<const double> d) {
  // Hyperspherical angles of d.
  Json a = Json::array();
  const std::size_t n = d.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double tail = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) tail += d[j] * d[j];
    if (i + 2 == n) a.push_back(std::atan2(d[n - 1], d[n - 2]));
    else a.push_back(std::atan2(std::sqrt(tail), d[i]));
  }
  return a;
}

void cmd_levelset_radii(Context& ctx) {
  const double c = require_level(ctx);
  ctx.report.config["seed"] = ctx.o.seed;
  ctx.report.config["level"] = c;
  ctx.echo_grid();
  const auto dirs = default_directions(ctx.f().dim(), ctx.o.seed);
  const Vec grid = uniform_grid(ctx.o.T, ctx.o.grid_points);
  Json radii = Json::array();
  bool pass = true;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    std::string status;
    double radius = 0.0;
    try {
      const LevelRadius lr = ray_level_radius(ctx.f(), dirs[i], c, std::nullopt, grid);
      status = to_string(lr.status);
      radius = lr.radius;
    } catch (const std::invalid_argument&) {
      status = "non_monotone";
    }
    const Json ang = angles(dirs[i]);
    Json entry = {{"index", i}, {"direction", vec_json(dirs[i])}, {"angles", ang}, {"status", status}};
    std::string ang_text;
    for (std::size_t k = 0; k < ang.size(); ++k) ang_text += (k ? ";" : "") + ang[k].dump();
    if (status == "found") {
      entry["radius"] = radius;
      ctx.report.rows.push_back({"radius", std::to_string(i), ang_text, Json(radius).dump(), status});
    } else {
      pass = false;
      ctx.report.rows.push_back({"radius", std::to_string(i), ang_text, "", status});
      ctx.report.witnesses.push_back({{"kind", status}, {"index", i}, {"direction", vec_json(dirs[i])}});
    }
    radii.push_back(entry);
  }
  ctx.report.metrics["radii"] = radii;
  ctx.report.verdict = pass_fail(pass);
}

void bounds_witnesses(Context& ctx, const BoundsReport& r) {
  for (const auto& w : r.witnesses) {
    ctx.report.witnesses.push_back(
        {{"kind", w.kind}, {"x", vec_json(w.x)}, {"value", w.value}, {"bound", w.bound}});
  }
}

void cmd_levelset_bounds(Context& ctx) {
  const SamplingPlan plan = ctx.plan(10000);
  ctx.echo_plan(plan);
  auto& m = ctx.report.metrics;
  const auto& info = ctx.f().info();
  const std::size_t n = ctx.f().dim();
  if (info.ph_degree && !(ctx.o.alpha > 0.0)) {
    const double alpha = *info.ph_degree;
    const SphereExtrema ext = sphere_extrema(ctx.f(), 256 * n, 24, ctx.o.seed);
    // Extrema are for p(x★ + u) - p(x★).
    const double m_p = ext.m - ctx.f().reference_value();
    const double M_p = ext.M - ctx.f().reference_value();
    m["mode"] = "ph";
    if (!(m_p > 0.0)) {
      const std::string note = "p is not positive on the unit sphere (min " + Json(m_p).dump() + ")";
      m["note"] = note;
      ctx.report.witnesses.push_back({{"kind", "precondition"}, {"x", vec_json(ext.argmin)}, {"detail", note}});
      ctx.report.verdict = "precondition_failed";
      return;
    }
    const BoundsReport r = check_ph_sandwich(ctx.f(), alpha, m_p, M_p, plan);
    m["alpha"] = alpha;
    m["m_p"] = m_p;
    m["M_p"] = M_p;
    m["argmin"] = vec_json(ext.argmin);
    m["argmax"] = vec_json(ext.argmax);
    m["samples"] = r.samples;
    m["violations"] = r.violations;
    bounds_witnesses(ctx, r);
    ctx.report.verdict = pass_fail(r.pass);
    return;
  }
  const Decomposition d = build_decomposition(ctx.f(), decomposition_options(ctx, ctx.o.x0, "", ""));
  const BoundsReport r = check_si_sandwich(ctx.f(), d, plan);
  m["mode"] = "si";
  m["decomposition"] = decomposition_json(d);
  if (r.precondition_failed) {
    m["note"] = r.note;
    ctx.report.witnesses.push_back({{"kind", "precondition"}, {"detail", r.note}});
    ctx.report.verdict = "precondition_failed";
    return;
  }
  m["m_p"] = r.m_p;
  m["M_p"] = r.M_p;
  m["m"] = r.m;
  m["M"] = r.M;
  m["samples"] = r.samples;
  m["violations"] = r.violations;
  bounds_witnesses(ctx, r);
  ctx.report.verdict = pass_fail(r.pass);
}

void cmd_levelset_compact(Context& ctx) {
  const double c = ctx.o.level_set ? ctx.o.level : ctx.f().reference_value() + 1.0;
  ctx.report.config["seed"] = ctx.o.seed;
  ctx.report.config["level"] = c;
  ctx.echo_grid();
  const auto dirs = default_directions(ctx.f().dim(), ctx.o.seed);
  const CompactnessReport r = compactness_probe(ctx.f(), dirs, c, uniform_grid(ctx.o.T, ctx.o.grid_points));
  ctx.report.metrics["compactness"] = to_string(r.verdict);
  ctx.report.metrics["max_radius"] = r.max_radius;
  ctx.report.metrics["directions"] = dirs.size();
  ctx.report.metrics["bracket_cap"] = BracketOptions{}.upper_cap;
  for (const auto& w : r.witnesses) {
    ctx.report.witnesses.push_back({{"kind", w.reason}, {"direction", vec_json(w.direction)}});
  }
  ctx.report.verdict = pass_fail(r.verdict == CompactnessVerdict::bounded);
}

void cmd_levelset_negligible(Context& ctx) {
  const double c = require_level(ctx);
  const std::size_t N = ctx.o.samples ? ctx.o.samples : 1000000;
  const double R = ctx.o.box > 0.0 ? ctx.o.box : 2.0;
  const Vec eps = parse_list(ctx.o.eps, "--eps");
  ctx.report.config["seed"] = ctx.o.seed;
  ctx.report.config["samples"] = N;
  ctx.report.config["box_radius"] = R;
  ctx.report.config["level"] = c;
  ctx.report.config["eps"] = eps;
  ctx.report.config["kappa"] = ctx.o.kappa;
  const NegligibilityReport r = negligibility_probe(ctx.f(), c, eps, N, R, ctx.o.seed, ctx.o.threads, ctx.o.kappa);
  Json shells = Json::array();
  for (const auto& s : r.shells) {
    shells.push_back({{"eps", s.eps}, {"hits", s.hits}, {"fraction", s.fraction}, {"sigma", s.sigma}});
  }
  ctx.report.metrics["shells"] = shells;
  ctx.report.metrics["assumption"] = "rays of f are continuous (not verified for expression fields)";
  if (!r.pass) ctx.report.witnesses.push_back({{"kind", "shell_fractions"}, {"detail", r.note}, {"shells", shells}});
  ctx.report.verdict = pass_fail(r.pass);
}

void cmd_cert_positive_region(Context& ctx) {
  CertificateOptions co;
  co.seed = ctx.o.seed;
  co.level_points = ctx.o.level_points;
  co.delta_cap = ctx.o.delta_cap;
  co.spec = gradient_spec(ctx);
  ctx.report.config["seed"] = co.seed;
  ctx.report.config["level_points"] = co.level_points;
  ctx.report.config["delta_cap"] = co.delta_cap;
  ctx.report.config["h"] = co.spec.step;
  const NeighborhoodCertificate cert = positive_gradient_region(ctx.f(), co);
  auto& m = ctx.report.metrics;
  m["found"] = cert.found;
  m["s"] = vec_json(cert.s);
  m["z0"] = vec_json(cert.z0);
  m["t0"] = cert.t0;
  m["level"] = cert.level;
  m["epsilon"] = cert.epsilon;
  m["delta"] = cert.delta;
  m["delta_margin"] = cert.delta_margin;
  m["stop_reason"] = cert.stop_reason;
  m["level_radius_range"] = {cert.level_radius_min, cert.level_radius_max};
  m["level_samples"] = cert.level_samples;
  m["fattened_samples"] = cert.fattened_samples;
  m["skipped"] = cert.skipped;
  m["note"] = "epsilon is the minimum over sampled level-set points only";
  if (!cert.found) {
    Json scan = Json::array();
    for (const auto& s : cert.scan) scan.push_back({s.t, s.derivative});
    ctx.report.witnesses.push_back({{"kind", "no_certificate"}, {"detail", cert.failure}, {"scan", scan}});
  }
  ctx.report.verdict = pass_fail(cert.found);
}

void cmd_solve_paired_level(Context& ctx) {
  const double tol = ctx.tol(1e-10);
  ctx.report.config["r"] = ctx.o.r;
  ctx.report.config["tol"] = tol;
  PairedLevel p;
  try {
    p = paired_level_solver(ctx.o.r);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  ctx.report.metrics["r"] = p.r;
  ctx.report.metrics["s"] = p.s;
  ctx.report.metrics["residual"] = p.residual;
  ctx.report.metrics["iterations"] = p.iterations;
  const bool pass = std::fabs(p.residual) <= tol;
  if (!pass) ctx.report.witnesses.push_back({{"kind", "residual"}, {"residual", p.residual}});
  ctx.report.verdict = pass_fail(pass);
}

// ------------------------------------------------------------------- wiring

struct Leaf {
  std::string name;
  CLI::App* app;
  bool needs_field;
  std::function<void(Context&)> fn;
};

void add_output(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "Seed (SIPH_SEED overrides)");
  app->add_option("--threads", o.threads, "Worker threads, 0 = all cores");
  app->add_option("--out", o.out, "Report path, - for stdout");
  app->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

void add_field(CLI::App* app, Options& o) {
  app->add_option("--gallery", o.gallery, "Gallery entry name");
  app->add_option("--expr", o.expr, "Expression over x_1..x_n");
  app->add_option("--n", o.n, "Dimension");
  app->add_option("--param", o.params, "Gallery parameter key=v1,v2,... (repeatable)");
  app->add_option("--phi", o.phi, "Monotone transform applied on top (power:2, exp_neg, ...)");
}

void add_sampling(CLI::App* app, Options& o) {
  app->add_option("--N", o.samples, "Sample count")->check(CLI::PositiveNumber);
  app->add_option("--box", o.box, "Sampling box radius R");
  app->add_option("--rho-min", o.rho_min, "Smallest scaling factor");
  app->add_option("--rho-max", o.rho_max, "Largest scaling factor");
}

void add_grid(CLI::App* app, Options& o) {
  app->add_option("--T", o.T, "Ray grid scale");
  app->add_option("--grid-points", o.grid_points, "Ray grid size");
}

void add_decomp(CLI::App* app, Options& o) {
  app->add_option("--alpha", o.alpha, "Degree of p");
  app->add_option("--x0", o.x0, "One-sided reference direction, comma-separated");
  app->add_option("--x-pos", o.x_pos, "Two-sided positive reference");
  app->add_option("--x-neg", o.x_neg, "Two-sided negative reference");
  app->add_option("--orientation", o.orientation, "increasing or positive_p");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Scaling-invariant and positively homogeneous function toolkit", "siph"};
  // -h is left free so that --h can name the finite-difference step.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  std::vector<Leaf> leaves;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc, bool field,
                  std::function<void(Context&)> fn) {
    CLI::App* sub = parent->add_subcommand(name, desc);
    add_output(sub, o);
    if (field) add_field(sub, o);
    leaves.push_back({parent == &app ? name : parent->get_name() + " " + name, sub, field, std::move(fn)});
    return sub;
  };
  auto group = [&](const std::string& name, const std::string& desc) {
    CLI::App* g = app.add_subcommand(name, desc);
    g->require_subcommand(1);
    return g;
  };

  CLI::App* gallery = group("gallery", "Builtin fields");
  leaf(gallery, "list", "List gallery entries with ground-truth tags", false, cmd_gallery_list);

  CLI::App* check = group("check", "Property checks");
  CLI::App* si = leaf(check, "si", "Sampled scaling-invariance check", true, cmd_check_si);
  add_sampling(si, o);
  CLI::App* dec = leaf(check, "decomposable", "Ray monotonicity and image-sharing check", true, cmd_check_decomposable);
  add_grid(dec, o);

  CLI::App* decompose = leaf(&app, "decompose", "Build f = phi o p and verify it", true, cmd_decompose);
  add_sampling(decompose, o);
  add_decomp(decompose, o);
  decompose->add_option("--tol", o.tol, "Residual tolerance");
  decompose->add_option("--ref2-x0", o.ref2_x0, "Second one-sided reference for the uniqueness check");
  decompose->add_option("--ref2-x-pos", o.ref2_x_pos, "Second two-sided positive reference");
  decompose->add_option("--ref2-x-neg", o.ref2_x_neg, "Second two-sided negative reference");

  CLI::App* verify = group("verify", "Differential identities");
  CLI::App* eu = leaf(verify, "euler", "alpha p(x) = grad p(x).x", true, cmd_verify_euler);
  add_sampling(eu, o);
  eu->add_option("--alpha", o.alpha, "Degree (defaults to the declared one)");
  eu->add_option("--h", o.h, "Finite-difference step");
  eu->add_flag("--fd", o.fd, "Use finite differences even if an analytic gradient exists");
  eu->add_option("--axis-margin", o.axis_margin, "Skip samples this close to a coordinate hyperplane");
  eu->add_option("--tol", o.tol, "Residual tolerance");
  CLI::App* ge = leaf(verify, "general-euler", "grad f(x).x = alpha phi'(p) p", true, cmd_verify_general_euler);
  add_sampling(ge, o);
  add_decomp(ge, o);
  ge->add_option("--h", o.h, "Finite-difference step");
  ge->add_flag("--fd", o.fd, "Use finite differences even if an analytic gradient exists");
  ge->add_option("--phi-step", o.phi_step, "Relative step for phi'");
  ge->add_option("--tol", o.tol, "Residual tolerance");
  CLI::App* lg = leaf(verify, "levelset-grad", "Constancy of grad f(z).z on a level set", true, cmd_verify_levelset_grad);
  lg->add_option("--level", o.level, "Level value")->each([&](const std::string&) { o.level_set = true; });
  lg->add_option("--points", o.points, "Level-set points");
  lg->add_option("--h", o.h, "Finite-difference step");
  lg->add_flag("--fd", o.fd, "Use finite differences even if an analytic gradient exists");
  lg->add_option("--tol", o.tol, "Spread tolerance");

  CLI::App* levelset = group("levelset", "Level-set geometry");
  CLI::App* radii = leaf(levelset, "radii", "Ray intersection radii of a level set", true, cmd_levelset_radii);
  radii->add_option("--level", o.level, "Level value")->each([&](const std::string&) { o.level_set = true; });
  add_grid(radii, o);
  CLI::App* bounds = leaf(levelset, "bounds", "Ball sandwich bounds", true, cmd_levelset_bounds);
  add_sampling(bounds, o);
  bounds->add_option("--alpha", o.alpha, "Force the SI form with this degree");
  bounds->add_option("--x0", o.x0, "Reference direction for the SI form");
  CLI::App* compact = leaf(levelset, "compact", "Compactness of a sublevel set", true, cmd_levelset_compact);
  compact->add_option("--level", o.level, "Level value (default f(x*) + 1)")->each([&](const std::string&) { o.level_set = true; });
  add_grid(compact, o);
  CLI::App* negl = leaf(levelset, "negligible", "Monte Carlo measure of level-set shells", true, cmd_levelset_negligible);
  negl->add_option("--level", o.level, "Level value")->each([&](const std::string&) { o.level_set = true; });
  negl->add_option("--N", o.samples, "Sample count (default 1e6)")->check(CLI::PositiveNumber);
  negl->add_option("--box", o.box, "Box radius (default 2)");
  negl->add_option("--eps", o.eps, "Strictly decreasing shell widths, comma-separated");
  negl->add_option("--kappa", o.kappa, "Pass threshold factor on the smallest eps");

  CLI::App* cert = group("cert", "Certificates");
  CLI::App* pr = leaf(cert, "positive-region", "Neighborhood where grad f(z).z > 0", true, cmd_cert_positive_region);
  pr->add_option("--level-points", o.level_points, "Level-set samples");
  pr->add_option("--delta-cap", o.delta_cap, "Largest neighborhood radius tried");
  pr->add_option("--h", o.h, "Finite-difference step");
  pr->add_flag("--fd", o.fd, "Use finite differences even if an analytic gradient exists");

  CLI::App* solve = group("solve", "Scalar solvers");
  CLI::App* pl = leaf(solve, "paired-level", "s > 1 with s^2 exp(-s^2) = r^2 exp(-r^2)", false, cmd_solve_paired_level);
  pl->add_option("--r", o.r, "r in (0, 1)")->required();
  pl->add_option("--tol", o.tol, "Residual tolerance");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  const Leaf* chosen = nullptr;
  for (const auto& l : leaves)
    if (l.app->parsed()) chosen = &l;
  if (!chosen) {
    err << "no command given; see --help\n";
    return kExitUsage;
  }

  if (const char* env = std::getenv("SIPH_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      o.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      err << "SIPH_SEED must be a non-negative integer\n";
      return kExitUsage;
    }
  }

  Context ctx;
  ctx.o = o;
  ctx.command = chosen->name;
  ctx.report.command = chosen->name;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (chosen->needs_field) resolve_field(ctx);
    chosen->fn(ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const expr::ExprError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  ctx.report.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  const bool pass = ctx.report.verdict == "pass";
  if (!pass && ctx.report.witnesses.empty()) {
    ctx.report.witnesses.push_back({{"kind", ctx.report.verdict}});
  }
  try {
    emit_report(ctx.report, o.out, o.format == "csv" ? ReportFormat::csv : ReportFormat::json, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return pass ? kExitPass : kExitFail;
}

}  // namespace siph::cli
