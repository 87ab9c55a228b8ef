#include <doctest.h>

#include <cmath>

#include "siph/decomposition.hpp"
#include "siph/gallery.hpp"
#include "siph/random.hpp"

using namespace siph;

namespace {

SamplingPlan plan_with(std::size_t samples, std::uint64_t seed = 0) {
  SamplingPlan p;
  p.samples = samples;
  p.seed = seed;
  return p;
}

DecompositionOptions one_sided(Vec x0, double alpha = 1.0, Orientation o = Orientation::increasing) {
  DecompositionOptions opts;
  opts.x0 = std::move(x0);
  opts.alpha = alpha;
  opts.orientation = o;
  return opts;
}

DecompositionOptions two_sided(Vec xp, Vec xn, double alpha = 1.0) {
  DecompositionOptions opts;
  opts.x_pos = std::move(xp);
  opts.x_neg = std::move(xn);
  opts.alpha = alpha;
  return opts;
}

}  // namespace

TEST_CASE("sq_norm with a unit reference recovers the norm") {
  const ScalarField f = make_builtin("sq_norm", 3);
  const Decomposition d = build_decomposition(f, one_sided({1.0, 0.0, 0.0}));
  CHECK(d.kind() == DecompositionCase::one_sided);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vec x = uniform_box(rng, 3, 2.0);
    CHECK(std::fabs(d.p(x) - std::sqrt(norm2(x))) <= 1e-9);
  }
  CHECK(d.p(Vec{0.0, 0.0, 0.0}) == 0.0);
  CHECK(d.phi(3.0) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(d.phi(0.0) == 0.0);
  CHECK(std::fabs(d.phi_inverse(4.0) - 2.0) <= 1e-9);
  CHECK(d.phi_inverse(0.0) == 0.0);
  CHECK_THROWS_AS(d.phi(-1.0), DecompositionError);
}

TEST_CASE("linear_x1 two-sided decomposition") {
  const ScalarField f = make_builtin("linear_x1", 2);
  const Decomposition d = build_decomposition(f, two_sided({1.0, 0.0}, {-1.0, 0.0}));
  CHECK(d.kind() == DecompositionCase::two_sided);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Vec x = uniform_box(rng, 2, 3.0);
    CHECK(std::fabs(d.p(x) - x[0]) <= 1e-9);
  }
  CHECK(d.phi(-2.0) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(d.phi(0.0) == 0.0);
  CHECK(d.phi_inverse(-3.5) == doctest::Approx(-3.5).epsilon(1e-12));

  // Automatic construction finds the two-sided case on its own.
  const Decomposition a = build_decomposition(f);
  CHECK(a.kind() == DecompositionCase::two_sided);
  CHECK(a.p(Vec{-0.5, 0.7}) < 0.0);
  CHECK(a.p(Vec{0.5, 0.7}) > 0.0);
}

TEST_CASE("gauss_si has decreasing rays") {
  const ScalarField f = compose(MonotoneTransform::exp_neg(), make_builtin("sq_norm", 3));
  const Decomposition pos = build_decomposition(f, one_sided({1.0, 0.0, 0.0}, 2.0, Orientation::positive_p));
  const Decomposition inc = build_decomposition(f, one_sided({1.0, 0.0, 0.0}, 2.0));
  CHECK(pos.kind() == DecompositionCase::one_sided);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec x = uniform_box(rng, 3, 1.5);
    CHECK(std::fabs(pos.p(x) - norm2(x)) <= 1e-8);
    CHECK(std::fabs(inc.p(x) + norm2(x)) <= 1e-8);
  }
  // Decreasing profile in the positive_p orientation, increasing otherwise.
  CHECK(pos.phi(1.0) < pos.phi(0.5));
  CHECK(inc.phi(-1.0) < inc.phi(-0.5));
  CHECK(pos.phi(1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
}

TEST_CASE("alpha rescaling") {
  const ScalarField f = make_builtin("norm", 2);
  const Decomposition d2 = build_decomposition(f, one_sided({0.0, 1.0}, 2.0));
  const Vec x{0.6, -1.1};
  CHECK(d2.p(x) == doctest::Approx(norm2(x)).epsilon(1e-12));
  CHECK(d2.phi(4.0) == doctest::Approx(2.0).epsilon(1e-12));
  const Decomposition lin = build_decomposition(make_builtin("linear_x1", 2), two_sided({1.0, 0.0}, {-1.0, 0.0}, 3.0));
  CHECK(lin.p(Vec{-2.0, 1.0}) == doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(lin.phi(-8.0) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("phi round trip through quadrature") {
  const ScalarField f = make_builtin("logsq_si", 2);
  const Decomposition d = build_decomposition(f, one_sided({1.0, 0.0}));
  CHECK(std::fabs(d.phi_inverse(d.phi(1.5)) - 1.5) <= 1e-7);
  CHECK(d.phi(1.0) == doctest::Approx(logsq_phi(1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(d.phi_inverse(-1.0), DecompositionError);
}

TEST_CASE("verify_decomposition residuals") {
  {
    const ScalarField f = make_builtin("sphere", 10);
    const DecompositionResiduals r = verify_decomposition(f, build_decomposition(f), plan_with(1000));
    CHECK(r.max_value_residual <= 1e-8);
    CHECK(r.max_ph_residual_normalized <= 1e-8);
    CHECK(r.failures == 0);
    CHECK(r.samples == 1000);
  }
  {
    const ScalarField f = random_si(7, 5, 0.3);
    const DecompositionResiduals r = verify_decomposition(f, build_decomposition(f), plan_with(1000));
    CHECK(r.max_value_residual <= 1e-7);
    CHECK(r.max_ph_residual_normalized <= 1e-7);
  }
  {
    const ScalarField f = make_builtin("zero", 3);
    const Decomposition d = build_decomposition(f);
    CHECK(d.kind() == DecompositionCase::zero);
    const DecompositionResiduals r = verify_decomposition(f, d, plan_with(500));
    CHECK(r.max_value_residual == 0.0);
    CHECK(r.max_ph_residual == 0.0);
    CHECK(d.p(Vec{1.0, 2.0, 3.0}) == 0.0);
  }
}

TEST_CASE("PH exactness on ten thousand pairs") {
  for (const std::string name : {"half_norm", "gauss_si", "ellipsoid"}) {
    const ScalarField f = make_builtin(name, 4);
    const Decomposition d = build_decomposition(f);
    const DecompositionResiduals r = verify_decomposition(f, d, plan_with(10000, 5));
    INFO(name);
    CHECK(r.max_ph_residual_normalized <= 1e-7);
    CHECK(r.max_value_residual <= 1e-7);
  }
}

TEST_CASE("homothety of the ray solution") {
  const ScalarField f = random_si(9, 3, 0.4).translated(Vec{0.5, -0.25, 1.0});
  const Decomposition d = build_decomposition(f);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Vec z = uniform_box(rng, 3, 1.0);
    const double rho = rng.log_uniform(0.5, 2.0);
    Vec x = f.reference(), y = f.reference();
    for (std::size_t k = 0; k < 3; ++k) {
      x[k] += z[k];
      y[k] += rho * z[k];
    }
    const auto lx = d.lambda(x), ly = d.lambda(y);
    REQUIRE(lx);
    REQUIRE(ly);
    CHECK(std::fabs(*ly - *lx / rho) <= 1e-9 * (*lx / rho));
  }
}

TEST_CASE("phi is strictly increasing over the achieved range") {
  for (const std::string name : {"sphere", "gauss_si", "saddle_si", "logsq_si", "linear_x1"}) {
    const ScalarField f = make_builtin(name, 2);
    const Decomposition d = build_decomposition(f);
    // One-sided p keeps the sign of p at the reference direction.
    const bool two = d.kind() == DecompositionCase::two_sided;
    const bool positive = d.p(Vec{1.0, 0.0}) > 0.0;
    const double lo = two || !positive ? -3.0 : 0.0;
    const double hi = two || positive ? 3.0 : 0.0;
    double prev = d.phi(lo);
    for (int i = 1; i <= 1000; ++i) {
      const double v = d.phi(lo + (hi - lo) * i / 1000.0);
      INFO(name << " i=" << i);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("uniqueness up to a linear map") {
  const ScalarField sq = make_builtin("sq_norm", 3);
  const Decomposition a = build_decomposition(sq, one_sided({1.0, 0.0, 0.0}));
  const Decomposition b = build_decomposition(sq, one_sided({2.0, 0.0, 0.0}));
  const UniquenessReport u = uniqueness_check(sq, a, b, plan_with(1000));
  CHECK(u.pass);
  REQUIRE(u.classes.size() == 1);
  CHECK(std::fabs(u.classes[0].mean - 2.0) <= 1e-8);

  const ScalarField sphere = make_builtin("sphere", 3);
  Rng rng(5);
  const Decomposition r1 = build_decomposition(sphere, one_sided(uniform_sphere(rng, 3)));
  const Decomposition r2 = build_decomposition(sphere, one_sided(uniform_sphere(rng, 3)));
  const UniquenessReport us = uniqueness_check(sphere, r1, r2, plan_with(1000));
  CHECK(us.pass);
  CHECK(std::fabs(us.classes[0].mean - 1.0) <= 1e-8);

  const ScalarField lin = make_builtin("linear_x1", 2);
  const Decomposition l1 = build_decomposition(lin, two_sided({1.0, 0.0}, {-1.0, 0.0}));
  const Decomposition l2 = build_decomposition(lin, two_sided({2.0, 0.0}, {-3.0, 0.0}));
  const UniquenessReport ul = uniqueness_check(lin, l1, l2, plan_with(1000));
  CHECK(ul.pass);
  REQUIRE(ul.classes.size() == 2);
  for (const auto& c : ul.classes) {
    CHECK(c.cv <= 1e-6);
    CHECK(std::fabs(c.mean - (c.label == "positive" ? 2.0 : 3.0)) <= 1e-8);
  }

  // A different field in the second slot breaks proportionality.
  const Decomposition other = build_decomposition(make_builtin("half_norm", 3), one_sided({1.0, 0.0, 0.0}));
  CHECK_FALSE(uniqueness_check(sq, a, other, plan_with(1000)).pass);
}

TEST_CASE("order equivalence") {
  const ScalarField sq = make_builtin("sq_norm", 3);
  const Decomposition d = build_decomposition(sq);
  CHECK(order_equivalence(sq, d.p_field(), plan_with(10000)).pass);

  const OrderEquivalenceReport bad = order_equivalence(make_builtin("sq_norm", 2), make_builtin("linear_x1", 2),
                                                       plan_with(100));
  CHECK_FALSE(bad.pass);
  REQUIRE_FALSE(bad.witnesses.empty());
  CHECK(bad.witnesses.front().x == Vec{0.0, 1.0});
  CHECK(bad.witnesses.front().y == Vec{0.5, 0.0});

  const ScalarField gauss = make_builtin("gauss_si", 3);
  const ScalarField neg_norm(3, [](std::span<const double> x) { return -std::sqrt(norm2(x)); },
                             FieldInfo{"neg_norm", 1.0, true, Regularity::continuous});
  CHECK(order_equivalence(gauss, neg_norm, plan_with(10000)).pass);
}

TEST_CASE("continuity of p") {
  for (const std::string name : {"sphere", "gauss_si", "random_si", "half_norm"}) {
    const ScalarField f = make_builtin(name, 3);
    const ContinuityReport c = continuity_probe(f, build_decomposition(f), plan_with(300));
    INFO(name);
    CHECK(c.pass);
    CHECK_FALSE(c.skipped);
  }
  const ScalarField pw = make_builtin("piecewise_ph", 2);
  CHECK(continuity_probe(pw, build_decomposition(pw), plan_with(100)).skipped);
}

TEST_CASE("p evaluation is thread safe and deterministic") {
  const ScalarField f = random_si(2, 4, 0.3);
  const Decomposition d = build_decomposition(f);
  SamplingPlan one = plan_with(4000, 8), many = plan_with(4000, 8);
  one.threads = 1;
  many.threads = 4;
  const DecompositionResiduals a = verify_decomposition(f, d, one);
  const DecompositionResiduals b = verify_decomposition(f, build_decomposition(f), many);
  CHECK(a.max_value_residual == b.max_value_residual);
  CHECK(a.max_ph_residual == b.max_ph_residual);
  CHECK(a.worst_value_point == b.worst_value_point);
}

TEST_CASE("bracket exhaustion yields NaN") {
  // tanh_exp: the positive x_1 rays never reach the value of the negative ones.
  const ScalarField f = make_builtin("tanh_exp", 2);
  const Decomposition d = build_decomposition(f, one_sided({-1.0, 0.0}));
  CHECK(std::isnan(d.p(Vec{1.0, 0.0})));
  CHECK(d.p(Vec{-2.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-12));
  const DecompositionResiduals r = verify_decomposition(f, d, plan_with(200));
  CHECK(r.failures > 0);
}
