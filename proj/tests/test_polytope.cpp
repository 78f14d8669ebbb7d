#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ksm/errors.hpp>
#include <ksm/polytope.hpp>

#include <oracle_values.hpp>

#include <algorithm>
#include <cmath>

using namespace ksm;

namespace {

double integral(const DualPolytope& d, const ScalarIntegrand& f) { return integrate(d, f).value(); }

bool has_vertex(const DualPolytope& d, std::vector<double> v) {
  return std::ranges::any_of(d.vertices_d, [&](const Point& p) {
    return std::abs(p[0] - v[0]) < 1e-14 && std::abs(p[1] - v[1]) < 1e-14;
  });
}

int count(const FanoValidation& v, FanoCondition c) {
  return static_cast<int>(std::ranges::count_if(v.violations, [&](const auto& x) { return x.condition == c; }));
}

}  // namespace

TEST_CASE("interval [-1, 1]") {
  auto d = dual_polytope(make_fano({{-1}, {1}}));
  CHECK(d.vertex_count() == 2);
  CHECK(d.volume == Rational(2));
  CHECK(d.lattice_points.size() == 3);
  CHECK(integral(d, [](auto) { return 1.0; }) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("P2 triangle and its dual") {
  auto d = dual_polytope(make_fano({{1, 0}, {0, 1}, {-1, -1}}));
  CHECK(d.vertex_count() == 3);
  CHECK(has_vertex(d, {1, 1}));
  CHECK(has_vertex(d, {1, -2}));
  CHECK(has_vertex(d, {-2, 1}));
  CHECK(d.volume == Rational(9, 2));
  CHECK(d.lattice_points.size() == 10);
}

TEST_CASE("cross polytope dual is the square") {
  auto d = dual_polytope(make_fano({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));
  CHECK(d.vertex_count() == 4);
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) CHECK(has_vertex(d, {a, b}));
  CHECK(d.volume == Rational(4));
  CHECK(d.lattice_points.size() == 9);
}

TEST_CASE("Fano violations are reported per condition") {
  auto square = validate_fano(std::vector<IntPoint>{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
  CHECK_FALSE(square.valid());
  CHECK(count(square, FanoCondition::unimodular) == 4);

  auto half = validate_fano(std::vector<RatPoint>{{Rational(1, 2)}, {Rational(-1)}});
  CHECK(count(half, FanoCondition::integral) >= 1);

  auto off = validate_fano(std::vector<IntPoint>{{1, 0}, {0, 1}, {1, 1}});
  CHECK(count(off, FanoCondition::origin_interior) >= 1);

  auto inner = validate_fano(std::vector<IntPoint>{{1, 0}, {0, 1}, {-1, -1}, {0, 0}});
  CHECK(count(inner, FanoCondition::not_extreme) >= 1);

  auto det3 = validate_fano(std::vector<IntPoint>{{1, 0}, {0, 1}, {-1, -2}, {1, 1}});
  CHECK_FALSE(det3.valid());

  CHECK_THROWS_AS(make_fano({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}), InvalidInput);
  CHECK_THROWS_AS(validate_fano(std::vector<IntPoint>{}), InvalidInput);
  CHECK_THROWS_AS(validate_fano(std::vector<IntPoint>{{1, 0}, {1, 0}, {-1, 0}}), InvalidInput);
  CHECK_THROWS_AS(validate_fano(std::vector<IntPoint>{{1, 0}, {-1, 0}}), InvalidInput);
}

TEST_CASE("support function of the P2 dual") {
  auto d = dual_polytope(make_fano({{1, 0}, {0, 1}, {-1, -1}}));
  const double e1[] = {1, 0}, m[] = {-1, -1}, o[] = {0, 0};
  CHECK(support_function(d, e1) == doctest::Approx(1));
  CHECK(support_function(d, m) == doctest::Approx(1));
  CHECK(support_function(d, o) == 0.0);
}

TEST_CASE("monomial moments over the P2 dual") {
  auto d = dual_polytope(make_fano({{1, 0}, {0, 1}, {-1, -1}}));
  auto mono = [&](int a, int b) {
    return integral(d, [=](std::span<const double> z) { return std::pow(z[0], a) * std::pow(z[1], b); });
  };
  CHECK(std::abs(mono(0, 0) - oracle::P2_mono_00) <= 1e-12);
  CHECK(std::abs(mono(1, 0) - oracle::P2_mono_10) <= 1e-12);
  CHECK(std::abs(mono(2, 0) - oracle::P2_mono_20) <= 1e-12);
  CHECK(std::abs(mono(1, 1) - oracle::P2_mono_11) <= 1e-12);
  CHECK(std::abs(mono(3, 1) - oracle::P2_mono_31) <= 1e-12);
  CHECK(std::abs(mono(2, 2) - oracle::P2_mono_22) <= 1e-12);
  CHECK(std::abs(mono(4, 0) - oracle::P2_mono_40) <= 1e-12);
}

TEST_CASE("polynomial weight on the interval") {
  auto d = dual_polytope(make_fano({{-1}, {1}}));
  CHECK(std::abs(integral(d, [](std::span<const double> z) { return z[0] * (1 + z[0] / 2); }) - 1.0 / 3) <= 1e-14);
}

TEST_CASE("cuts and grading") {
  auto sq = dual_polytope(make_fano({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));
  AffineCut cut{{1, 0}, 0};
  auto half = integrate(sq, [](std::span<const double>) { return 1.0; }, {}, std::span(&cut, 1));
  CHECK(half.value() == doctest::Approx(2).epsilon(1e-12));

  auto d = dual_polytope(make_fano({{-1}, {1}}));
  Grading g{{-1}, 1};  // singular at z = 1
  auto r = integrate(d, [](std::span<const double> z) { return std::pow(1 - z[0], 0.3); }, {}, {}, g);
  CHECK(std::abs(r.value() - std::pow(2, 1.3) / 1.3) <= 1e-9);
}

TEST_CASE("dimension 3 quadrature is refused") {
  auto d = dual_polytope(make_fano({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {-1, 0, 0}, {0, -1, 0}, {0, 0, -1}}));
  CHECK(d.vertex_count() == 8);
  CHECK_THROWS_AS(integrate(d, [](std::span<const double>) { return 1.0; }), UnsupportedDimension);
}

TEST_CASE("membership") {
  auto d = dual_polytope(make_fano({{1, 0}, {0, 1}, {-1, -1}}));
  const double in[] = {0.2, 0.3}, out[] = {1.1, 0};
  CHECK(d.contains(in));
  CHECK_FALSE(d.contains(out));
  CHECK(d.on_boundary(RatPoint{Rational(1), Rational(0)}));
  CHECK_FALSE(d.on_boundary(RatPoint{Rational(0), Rational(0)}));
  CHECK(d.contains(RatPoint{Rational(-2), Rational(1)}));
}
