#include <doctest.h>

#include <cmath>

#include "siph/expr.hpp"
#include "siph/gallery.hpp"
#include "siph/random.hpp"
#include "siph/ray_analysis.hpp"

using namespace siph;

namespace {

SamplingPlan plan_with(std::size_t samples, std::uint64_t seed = 0) {
  SamplingPlan p;
  p.samples = samples;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("sampling plan validation") {
  SamplingPlan p;
  CHECK_NOTHROW(p.validate());
  p.samples = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SamplingPlan{};
  p.rho_min = 2.0;
  p.rho_max = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = SamplingPlan{};
  p.grid = {0.5, 0.5, 1.0};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  const Vec g = uniform_grid(20.0, 4);
  CHECK(g == Vec{5.0, 10.0, 15.0, 20.0});
}

TEST_CASE("scaling invariance examples") {
  const SIReport sphere = check_scaling_invariance(make_builtin("sphere", 3), plan_with(10000));
  CHECK(sphere.pass);
  CHECK(sphere.witnesses.empty());
  CHECK(sphere.trials >= 10000);

  const SIReport te = check_scaling_invariance(make_builtin("tanh_exp", 2), plan_with(10000));
  CHECK(te.pass);

  const SIReport fn = check_scaling_invariance(make_builtin("footnote_1d", 1), plan_with(1000));
  CHECK_FALSE(fn.pass);
  REQUIRE_FALSE(fn.witnesses.empty());
  const SIWitness& w = fn.witnesses.front();
  CHECK(w.x == Vec{0.5});
  CHECK(w.y == Vec{-0.5});
  CHECK(w.rho == 4.0);
  CHECK(w.frx == 2.0);
  CHECK(w.fry == 4.0);
  CHECK(w.reason == "order_flip");
  CHECK(fn.violations >= fn.witnesses.size());
  CHECK(fn.witnesses.size() <= kMaxWitnesses);
}

TEST_CASE("tie band") {
  CHECK(compare_with_band(1.0, 1.0 + 1e-14) == 0);
  CHECK(compare_with_band(1.0, 1.0 + 1e-9) < 0);
  CHECK(compare_with_band(0.0, 1e-13) == 0);
  CHECK(compare_with_band(3.0, 2.0) > 0);
}

TEST_CASE("non-finite values become witnesses") {
  const ScalarField f = expr::bind(expr::parse("sqrt(x_1)"), 2);
  const SIReport r = check_scaling_invariance(f, plan_with(200));
  CHECK_FALSE(r.pass);
  REQUIRE_FALSE(r.witnesses.empty());
  CHECK(r.witnesses.front().reason == "non_finite");
}

TEST_CASE("reports are deterministic in the seed") {
  const ScalarField f = make_builtin("footnote_1d", 3);
  for (unsigned threads : {1u, 3u}) {
    SamplingPlan p = plan_with(5000, 17);
    p.threads = threads;
    const SIReport a = check_scaling_invariance(f, p);
    const SIReport b = check_scaling_invariance(f, plan_with(5000, 17));
    CHECK(a.violations == b.violations);
    REQUIRE(a.witnesses.size() == b.witnesses.size());
    for (std::size_t i = 0; i < a.witnesses.size(); ++i) {
      CHECK(a.witnesses[i].x == b.witnesses[i].x);
      CHECK(a.witnesses[i].y == b.witnesses[i].y);
      CHECK(a.witnesses[i].rho == b.witnesses[i].rho);
    }
  }
}

TEST_CASE("classify_ray examples") {
  const Vec grid = uniform_grid(10.0, 64);
  CHECK(classify_ray(make_builtin("sphere", 2), Vec{0.3, -0.2}, grid).kind == Monotonicity::increasing);
  const MonotoneVerdict pw = classify_ray(make_builtin("piecewise_ph", 2), Vec{0.0, 1.0}, grid);
  CHECK(pw.kind == Monotonicity::constant);
  CHECK_FALSE(pw.witness);
  CHECK(classify_ray(make_builtin("linear_x1", 2), Vec{-1.0, 0.0}, grid).kind == Monotonicity::decreasing);
  CHECK(classify_ray(make_builtin("gauss_si", 2), Vec{1.0, 1.0}, grid).kind == Monotonicity::decreasing);

  const ScalarField wave = expr::bind(expr::parse("sin(norm(x))"), 2);
  const MonotoneVerdict w = classify_ray(wave, Vec{1.0, 0.0}, grid);
  CHECK(w.kind == Monotonicity::non_monotone);
  REQUIRE(w.witness);
  CHECK(w.witness->first < w.witness->second);
  CHECK(std::string(to_string(Monotonicity::increasing)) == "strictly_increasing");
}

TEST_CASE("ray classification is stable under rescaling") {
  const Vec grid = uniform_grid(10.0, 64);
  for (const auto& e : gallery_registry()) {
    if (!e.truth.si) continue;
    const std::size_t n = std::max<std::size_t>(e.min_dim, 3);
    const ScalarField f = make_builtin(e.name, n);
    for (const Vec& d : default_directions(n, 5)) {
      const Monotonicity base = classify_ray(f, d, grid).kind;
      for (double rho : {0.1, 10.0}) {
        INFO(e.name << " rho=" << rho);
        CHECK(classify_ray(f, scaled(d, rho), grid).kind == base);
      }
    }
  }
}

TEST_CASE("decomposability verdicts match ground truth") {
  const Vec grid = uniform_grid(10.0, 64);
  for (const auto& e : gallery_registry()) {
    const std::size_t n = std::max<std::size_t>(e.min_dim, 2);
    const ScalarField f = make_builtin(e.name, n);
    const DecomposabilityReport r = check_decomposability(f, default_directions(n, 0), grid);
    INFO(e.name << ": " << r.note);
    const auto expected =
        e.truth.decomposable ? DecomposabilityVerdict::decomposable : DecomposabilityVerdict::not_decomposable;
    CHECK(r.verdict == expected);
    CHECK(r.witnesses.empty() == e.truth.decomposable);
  }
}

TEST_CASE("tanh_exp disjoint images at scale 20") {
  const DecomposabilityReport r =
      check_decomposability(make_builtin("tanh_exp", 2), default_directions(2, 0), uniform_grid(20.0, 64));
  CHECK(r.verdict == DecomposabilityVerdict::not_decomposable);
  REQUIRE_FALSE(r.witnesses.empty());
  const auto& w = r.witnesses.front();
  CHECK(w.kind == "disjoint_image");
  const bool a_low = w.hi_a <= 1.0;
  const double lo_low = a_low ? w.lo_a : w.lo_b, hi_low = a_low ? w.hi_a : w.hi_b;
  const double lo_high = a_low ? w.lo_b : w.lo_a;
  CHECK(lo_low >= 0.0);
  CHECK(hi_low <= 1.0);
  CHECK(lo_high > 2.0);
  CHECK(r.scale == 20.0);
}

TEST_CASE("linear_x1 is decomposable in the two-sided sense") {
  const DecomposabilityReport r =
      check_decomposability(make_builtin("linear_x1", 2), default_directions(2, 0), uniform_grid(10.0, 64));
  CHECK(r.verdict == DecomposabilityVerdict::decomposable);
  CHECK(r.increasing > 0);
  CHECK(r.decreasing > 0);
  CHECK(r.note.find("scale") != std::string::npos);
}
