#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ksm/datasets.hpp>
#include <ksm/errors.hpp>
#include <ksm/ksm_model.hpp>

#include <generators.hpp>
#include <oracle_values.hpp>

#include <cmath>

using namespace ksm;

TEST_CASE("positivity margins") {
  CHECK(*validate_ksm(builtin_dataset("Z1")).margin == Rational(1, 2));
  CHECK(*validate_ksm(builtin_dataset("Z2")).margin == Rational(1, 3));
  CHECK_FALSE(validate_ksm(builtin_dataset("product")).margin);

  auto bad = builtin_dataset("Z1");
  bad.mu = {{Rational(1)}};
  auto v = validate_ksm(bad);
  CHECK_FALSE(v.valid());
  CHECK(*v.margin == Rational(0));
  CHECK_THROWS_AS(make_model(bad), InvalidInput);

  auto wrong_count = builtin_dataset("Z2");
  wrong_count.mu.pop_back();
  CHECK_FALSE(validate_ksm(wrong_count).valid());
}

TEST_CASE("h moments against closed forms") {
  auto z1 = make_model(builtin_dataset("Z1"));
  auto z2 = make_model(builtin_dataset("Z2"));
  auto s1 = h_stats(z1), s2 = h_stats(z2);
  CHECK(std::abs(s1.volume - oracle::Z1_int_h) <= 1e-12);
  CHECK(std::abs(s1.ke_defect[0] - oracle::Z1_int_zh) <= 1e-12);
  CHECK(std::abs(s2.volume - oracle::Z2_int_h) <= 1e-12);
  CHECK(std::abs(s2.ke_defect[0] - oracle::Z2_int_zh) <= 1e-12);
  CHECK(std::abs(s1.barycenter[0] - oracle::Z1_barycenter) <= 1e-12);

  auto e1 = exact_h_moments(z1);
  REQUIRE(e1);
  CHECK(e1->volume == Rational(2));
  CHECK(e1->moments[0] == Rational(1, 3));
  CHECK(e1->barycenter[0] == Rational(1, 6));
  auto e2 = exact_h_moments(z2);
  CHECK(e2->volume == Rational(62, 27));
  CHECK(e2->moments[0] == Rational(8, 9));
  CHECK_FALSE(exact_h_moments(make_model(builtin_dataset("P2-fiber"))));
}

TEST_CASE("classical criterion") {
  CHECK(h_stats(make_model(builtin_dataset("product"))).ke_criterion());
  CHECK(h_stats(make_model(builtin_dataset("P2-fiber"))).ke_criterion());
  CHECK_FALSE(h_stats(make_model(builtin_dataset("Z1"))).ke_criterion());
  CHECK_FALSE(h_stats(make_model(builtin_dataset("Z2"))).ke_criterion());
}

TEST_CASE("h weight domain") {
  auto z1 = make_model(builtin_dataset("Z1"));
  const double in[] = {1.0}, out[] = {1.01};
  CHECK(h_weight(z1, in) == doctest::Approx(1.5));
  CHECK_THROWS_AS(h_weight(z1, out), DomainError);
  CHECK(h_value(z1, out) == doctest::Approx(1.505));
}

TEST_CASE("reference potential at the origin") {
  const double o1[] = {0.0}, o2[] = {0.0, 0.0};
  CHECK(reference_potential_uP(make_model(builtin_dataset("product")), o1) == doctest::Approx(std::log(3.0)));
  CHECK(reference_potential_uP(make_model(builtin_dataset("P2-fiber")), o2) == doctest::Approx(std::log(10.0)));
}

TEST_CASE("log-sum-exp: gradient in the hull, Hessian positive semidefinite") {
  auto m = make_model(builtin_dataset("P2-fiber"));
  std::vector<Point> pts;
  for (const auto& p : m.dual.lattice_points) pts.push_back({double(p[0]), double(p[1])});
  std::vector<double> w(pts.size(), 0.0);
  gen::Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const double y[] = {rng.uniform(-30, 30), rng.uniform(-30, 30)};
    auto r = log_sum_exp(pts, w, y);
    CHECK(m.dual.contains(r.gradient, 1e-9));
    const double a = r.hessian[0], b = r.hessian[1], c = r.hessian[3];
    CHECK(r.hessian[1] == doctest::Approx(r.hessian[2]));
    CHECK(a >= -1e-12);
    CHECK(c >= -1e-12);
    CHECK(a * c - b * b >= -1e-12 * std::max(1.0, a * c));
    // finite-difference gradient
    const double h = 1e-6;
    const double yp[] = {y[0] + h, y[1]}, ym[] = {y[0] - h, y[1]};
    const double fd = (log_sum_exp(pts, w, yp).value - log_sum_exp(pts, w, ym).value) / (2 * h);
    CHECK(std::abs(fd - r.gradient[0]) <= 1e-5);
  }
}
