#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>

#include "siph/decomposition.hpp"
#include "siph/euler.hpp"
#include "siph/gallery.hpp"
#include "siph/levelset.hpp"
#include "siph/random.hpp"

using namespace siph;

namespace {

SamplingPlan plan_with(std::size_t samples, std::uint64_t seed = 0) {
  SamplingPlan p;
  p.samples = samples;
  p.seed = seed;
  return p;
}

GradientSpec fd(double h) {
  GradientSpec s;
  s.step = h;
  s.prefer_analytic = false;
  return s;
}

// t e^{-t} = r² e^{-r²} on t > 1, solved with Boost TOMS 748; returns √t.
double paired_oracle(double r) {
  const double target = r * r * std::exp(-r * r);
  auto g = [&](double t) { return t * std::exp(-t) - target; };
  boost::uintmax_t iters = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(g, 1.0, 60.0, boost::math::tools::eps_tolerance<double>(52),
                                                          iters);
  return std::sqrt(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("Euler residual examples") {
  const EulerReport s = euler_residual(make_builtin("sphere", 3), 2.0, plan_with(2000), fd(1e-5));
  CHECK(s.max_residual <= 1e-6);
  CHECK(s.alpha == 2.0);
  CHECK(s.residuals.size() == 2000);
  for (double r : s.residuals) CHECK(r >= 0.0);

  CHECK(euler_residual(make_builtin("linear_x1", 3), 1.0, plan_with(2000), fd(1e-5)).max_residual <= 1e-10);

  // Hand gradient of (√x₁ + √x₂)² at (1, 1) is (2, 2).
  const ScalarField half = make_builtin("half_norm", 2);
  const Vec g = finite_difference_gradient(half, Vec{1.0, 1.0}, 1e-5);
  CHECK(std::fabs(g[0] - 2.0) <= 1e-6);
  CHECK(std::fabs(g[1] - 2.0) <= 1e-6);
  CHECK(std::fabs(g[0] + g[1] - half(Vec{1.0, 1.0})) <= 1e-6);

  EulerOptions off_axes;
  off_axes.axis_margin = 0.1;
  const EulerReport h = euler_residual(half, 1.0, plan_with(2000), fd(1e-5), off_axes);
  CHECK(h.max_residual <= 1e-6);
  for (double v : h.worst_point) CHECK(std::fabs(v) >= 0.1);
}

TEST_CASE("Euler residual falls quadratically in the step") {
  EulerOptions off_axes;
  off_axes.axis_margin = 0.1;
  for (const std::string name : {"norm", "half_norm"}) {
    const ScalarField p = make_builtin(name, 3);
    const double coarse = euler_residual(p, 1.0, plan_with(2000), fd(1e-2), off_axes).max_residual;
    const double fine = euler_residual(p, 1.0, plan_with(2000), fd(5e-3), off_axes).max_residual;
    INFO(name << " " << coarse << " " << fine);
    CHECK(coarse / fine >= 2.5);
    CHECK(coarse / fine <= 6.0);
  }
}

TEST_CASE("generalized Euler identity") {
  const ScalarField gauss = make_builtin("gauss_si", 3);
  DecompositionOptions opts;
  opts.alpha = 2.0;
  opts.orientation = Orientation::positive_p;
  const Decomposition gd = build_decomposition(gauss, opts);
  const GeneralEulerPoint at1 = general_euler_at(gauss, gd, Vec{1.0, 0.0, 0.0});
  CHECK(std::fabs(at1.lhs + 2.0 * std::exp(-1.0)) <= 1e-5);
  CHECK(std::fabs(at1.lhs - at1.rhs) <= 1e-5);
  CHECK(general_euler_residual(gauss, gd, plan_with(1000)).max_residual <= 1e-5);

  // sq_norm = φ∘p with p = ‖x‖ and φ(t) = t²: both sides are 2‖x‖².
  const ScalarField sq = make_builtin("sq_norm", 3);
  const Decomposition parts = Decomposition::from_parts(make_builtin("norm", 3), [](double t) { return t * t; }, 1.0, 0.0);
  const GeneralEulerPoint pt = general_euler_at(sq, parts, Vec{0.3, -1.2, 0.5});
  CHECK(pt.lhs == doctest::Approx(2.0 * (0.09 + 1.44 + 0.25)).epsilon(1e-9));
  CHECK(general_euler_residual(sq, parts, plan_with(1000)).max_residual <= 1e-6);

  const ScalarField r = random_si(11, 3, 0.2);
  CHECK(general_euler_residual(r, build_decomposition(r), plan_with(1000)).max_residual <= 1e-4);
}

TEST_CASE("level-set gradient constancy") {
  const LevelGradientReport s = levelset_gradient_constancy(make_builtin("sphere", 3), 4.0, 64);
  CHECK(s.pass);
  CHECK(std::fabs(s.min_value - 8.0) <= 1e-6);
  CHECK(std::fabs(s.max_value - 8.0) <= 1e-6);
  CHECK(s.points.size() == 64);

  const RandomSI rs(5, 4, 0.25);
  const LevelGradientReport r = levelset_gradient_constancy(rs.field(), rs.phi(1.0), 64, {}, 0, 1e-4);
  CHECK(r.pass);
  CHECK(r.spread <= 1e-4);
  CHECK(r.skipped == 0);

  const LevelGradientReport none = levelset_gradient_constancy(make_builtin("sphere", 2), -1.0, 16);
  CHECK(none.skipped == 16);
}

TEST_CASE("paired gauss levels share one value of grad f . z") {
  const ScalarField gauss = make_builtin("gauss_si", 3);
  for (double r : {0.3, 1.0 / std::sqrt(2.0), 0.7}) {
    const double s = paired_level_solver(r).s;
    const double c1 = std::exp(-r * r), c2 = std::exp(-s * s);
    const LevelGradientReport a = levelset_gradient_constancy(gauss, c1, 32);
    const LevelGradientReport b = levelset_gradient_constancy(gauss, c2, 32);
    REQUIRE(a.pass);
    REQUIRE(b.pass);
    INFO("r=" << r);
    CHECK(std::fabs(a.min_value - b.min_value) <= 1e-6);
    CHECK(std::fabs(a.min_value + 2.0 * r * r * std::exp(-r * r)) <= 1e-6);
    CHECK(std::fabs(c1 - c2) > 1e-3);
  }
}

TEST_CASE("paired level solver") {
  // mpmath.findroot at 50 digits.
  const std::pair<double, double> table[] = {{0.3, 1.9607703867700615408},
                                             {0.7, 1.3341349770771833719},
                                             {0.999, 1.0010003334445519211},
                                             {1.0 / std::sqrt(2.0), 1.3253041947515935019}};
  for (auto [r, s] : table) {
    const PairedLevel p = paired_level_solver(r);
    INFO("r=" << r);
    CHECK(std::fabs(p.s - s) <= 1e-9);
    CHECK(std::fabs(p.s - paired_oracle(r)) <= 1e-9);
    CHECK(std::fabs(p.residual) <= 1e-14);
    CHECK(p.s > 1.0);
  }
  CHECK(paired_level_solver(0.999).s <= 1.05);
  CHECK(std::fabs(paired_level_solver(1.0 / std::sqrt(2.0)).s - 1.325) <= 1e-3);
  CHECK(paired_level_solver(0.3).s > paired_level_solver(0.7).s);

  // Larger r gives smaller s across the whole interval.
  double prev = INFINITY;
  for (int k = 1; k < 100; ++k) {
    const double s = paired_level_solver(k / 100.0).s;
    CHECK(s < prev);
    prev = s;
  }

  for (double bad : {0.0, 1.0, -0.5, 1.5, std::nan("")}) CHECK_THROWS_AS(paired_level_solver(bad), std::invalid_argument);
  CHECK_THROWS_AS(paired_level_solver(paired_level_solver(0.5).s), std::invalid_argument);
}

TEST_CASE("saddle shells") {
  const ScalarField f = make_builtin("saddle_si", 3);
  const SaddleReport r = saddle_levels(f, 2, 1e-6, 16);
  CHECK(r.pass);
  CHECK(r.rays_increasing);
  REQUIRE(r.shells.size() == 2);
  CHECK(std::fabs(r.shells[0].radius - 1.7724538509055159) <= 1e-12);
  CHECK(std::fabs(r.shells[1].radius - 2.5066282746310002) <= 1e-12);
  for (const auto& s : r.shells) CHECK(s.max_grad_norm <= 1e-6);

  Rng rng(9);
  const double a = std::sqrt(std::numbers::pi);
  for (int i = 0; i < 20; ++i) {
    const Vec u = uniform_sphere(rng, 3);
    CHECK(f(scaled(u, a + 0.1)) > f(scaled(u, a - 0.1)));
    // Away from the shells the gradient is not small.
    CHECK(std::sqrt(norm2(gradient(f, scaled(u, a + 0.5)))) > 1e-2);
  }
}

TEST_CASE("positive gradient certificate") {
  const NeighborhoodCertificate s = positive_gradient_region(make_builtin("sphere", 3));
  REQUIRE(s.found);
  CHECK(std::fabs(s.epsilon - 2.0 * norm2(s.z0)) <= 1e-6);
  CHECK(s.stop_reason == "cap");
  CHECK(s.delta == 0.5);
  CHECK(std::sqrt(norm2(s.z0)) <= 1.0);
  CHECK(s.level_samples > 0);

  const NeighborhoodCertificate d = positive_gradient_region(make_builtin("saddle_si", 3));
  REQUIRE(d.found);
  CHECK(d.epsilon > 0.0);
  // Level radii and their δ-fattening stay clear of every saddle shell.
  for (int k = 1; k <= 3; ++k) {
    const double shell = std::sqrt(k * std::numbers::pi);
    const bool below = d.level_radius_max + d.delta < shell;
    const bool above = d.level_radius_min - d.delta > shell;
    CHECK((below || above));
  }

  const NeighborhoodCertificate r = positive_gradient_region(random_si(2, 3, 0.2));
  CHECK(r.found);
  CHECK(r.epsilon > 0.0);
  CHECK(r.delta >= r.delta_margin);

  const NeighborhoodCertificate g = positive_gradient_region(make_builtin("gauss_si", 2));
  CHECK_FALSE(g.found);
  CHECK_FALSE(g.failure.empty());
  CHECK_FALSE(g.scan.empty());
}
