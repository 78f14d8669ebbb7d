#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ksm/errors.hpp>
#include <ksm/sigma.hpp>

#include <generators.hpp>

#include <cmath>

using namespace ksm;

TEST_CASE("closed-form profiles and derivatives") {
  gen::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double s = rng.uniform(-0.99, 5);
    const double tau = rng.uniform(0, 1);
    auto v = SigmaProfile::tau_mix(tau).evaluate(s);
    CHECK(v.value == doctest::Approx(-(1 - tau) * s - tau * std::log(s + 1)));
    CHECK(v.d1 == doctest::Approx(-(1 - tau) - tau / (s + 1)));
    CHECK(v.d2 == doctest::Approx(tau / ((s + 1) * (s + 1))));

    auto m = SigmaProfile::mabuchi_log(2.0).evaluate(s);
    CHECK(m.value == doctest::Approx(-std::log(s + 2)));
    CHECK(m.d1 == doctest::Approx(-1 / (s + 2)));
    CHECK(m.d2 == doctest::Approx(1 / ((s + 2) * (s + 2))));

    auto l = SigmaProfile::linear(0.5).evaluate(s);
    CHECK(l.value == doctest::Approx(0.5 - s));
    CHECK(l.d1 == -1.0);
    CHECK(l.d2 == 0.0);
  }
  auto c = SigmaProfile::constant(1.5).evaluate(100);
  CHECK(c.value == 1.5);
  CHECK(c.d1 == 0.0);
}

TEST_CASE("domain boundaries") {
  auto t = SigmaProfile::tau_mix(0.5);
  CHECK(t.alpha() == -1.0);
  CHECK(t.blows_up_at_alpha());
  CHECK_THROWS_AS(t.evaluate(-1.0), DomainError);
  CHECK_THROWS_AS(t.evaluate(-2.0), DomainError);
  CHECK(t.multiplier(-1.0) == 0.0);
  CHECK_THROWS_AS(t.multiplier(-1.5), DomainError);
  // The family lives on (-1, inf) for every tau; at tau = 0 f stays positive there.
  CHECK(SigmaProfile::tau_mix(0.0).alpha() == -1.0);
  CHECK_FALSE(SigmaProfile::tau_mix(0.0).blows_up_at_alpha());
  CHECK_FALSE(SigmaProfile::linear().blows_up_at_alpha());
  auto w = SigmaProfile::constant(0, -1, 1);
  CHECK(w.in_domain(0));
  CHECK_FALSE(w.in_domain(1));
  CHECK_THROWS_AS(w.multiplier(1.0), DomainError);
}

TEST_CASE("admissibility") {
  CHECK(check_admissible(SigmaProfile::constant(0), 101).condition_i);
  CHECK_FALSE(check_admissible(SigmaProfile::constant(0), 101).condition_ii);
  CHECK(check_admissible(SigmaProfile::linear(), 101).admissible());
  CHECK(check_admissible(SigmaProfile::mabuchi_log(), 101).condition_ii);
  CHECK(check_admissible(SigmaProfile::tau_mix(0.3), 101).admissible());
  // Increasing: sigma' > 0 violates both conditions.
  auto up = SigmaProfile::custom({{0, 0}, {1, 1}, {2, 3}});
  auto r = check_admissible(up, 101);
  CHECK_FALSE(r.admissible());
  CHECK(r.numeric);
}

TEST_CASE("growth near alpha") {
  auto one = check_growth(SigmaProfile::tau_mix(1.0));
  CHECK(one.applicable);
  CHECK(one.holds);
  CHECK(one.a0 == doctest::Approx(1.0).epsilon(1e-9));
  auto half = check_growth(SigmaProfile::tau_mix(0.5), 3.0);
  CHECK(half.holds);
  CHECK(half.a0 > 0);
  CHECK_FALSE(check_growth(SigmaProfile::constant(0)).applicable);
  // f = (t + 1)^2 decays faster than linearly at alpha.
  auto fast = check_growth(SigmaProfile::mabuchi_log(1.0));
  CHECK(fast.holds);
}

TEST_CASE("custom interpolation") {
  std::vector<std::pair<double, double>> pts{{-1, 2}, {0, 1}, {1, 0.5}, {2, 0.3}, {3, 0.25}};
  auto p = SigmaProfile::custom(pts);
  CHECK(p.alpha() == -1);
  CHECK(p.beta() == 3);
  for (std::size_t i = 1; i + 1 < pts.size(); ++i)
    CHECK(p.evaluate(pts[i].first).value == doctest::Approx(pts[i].second).epsilon(1e-14));
  double prev = 3;
  for (double t = -0.999; t < 2.999; t += 0.01) {
    const double v = p.evaluate(t).value;
    CHECK(v <= prev + 1e-14);
    prev = v;
  }
  CHECK_THROWS_AS(SigmaProfile::custom({{0, 1}}), InvalidInput);
}
