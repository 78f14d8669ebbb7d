#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ksm/datasets.hpp>
#include <ksm/errors.hpp>
#include <ksm/field_solver.hpp>

#include <oracle_values.hpp>

#include <cmath>

using namespace ksm;

namespace {
KSMModel model_of(const char* name) { return make_model(builtin_dataset(name)); }
}  // namespace

TEST_CASE("soliton fields") {
  auto z1 = solve_soliton(model_of("Z1"));
  REQUIRE(z1.converged);
  CHECK(std::abs((*z1.c)[0] - oracle::Z1_soliton_c) <= 1e-10);
  CHECK(z1.residual <= 1e-10);
  auto z2 = solve_soliton(model_of("Z2"));
  REQUIRE(z2.converged);
  CHECK(std::abs((*z2.c)[0] - oracle::Z2_soliton_c) <= 1e-10);
  // Symmetric polytopes with h = 1: the soliton field vanishes.
  for (const char* name : {"product", "P2-fiber"}) {
    auto r = solve_soliton(model_of(name));
    REQUIRE(r.converged);
    for (double c : *r.c) CHECK(std::abs(c) <= 1e-10);
  }
}

TEST_CASE("soliton field balances the g-barycenter") {
  auto m = model_of("Z2");
  auto r = solve_soliton(m);
  auto f = normalize_field(*r.c, h_stats(m), m.dual);
  auto s = g_stats(m, SigmaProfile::linear(), f);
  CHECK(s.barycenter_norm() <= 1e-9);
}

TEST_CASE("one-dimensional path roots") {
  auto z1 = model_of("Z1");
  const std::pair<double, double> expected[] = {{0.0, oracle::Z1_root_0},
                                                {0.25, oracle::Z1_root_0_25},
                                                {0.5, oracle::Z1_root_0_5},
                                                {0.75, oracle::Z1_root_0_75},
                                                {1.0, oracle::Z1_root_1}};
  for (auto [tau, root] : expected) {
    CAPTURE(tau);
    auto p = solve_path_1d(z1, tau, PathParameter::constant);
    REQUIRE(p.has_root);
    CHECK(std::abs(*p.root - root) <= 1e-10);
    CHECK(std::abs(p.value_at_root) <= 1e-11);
    CHECK(p.lower == Rational(-1, 7));
    CHECK(p.upper == Rational(1, 5));
    CHECK(p.value_at_lower > 0);
    CHECK(p.value_at_upper < 0);
    auto q = solve_path_1d(z1, tau, PathParameter::slope);
    REQUIRE(q.has_root);
    CHECK(std::abs(*q.root + 6 * root) <= 1e-9);
  }
  CHECK(std::abs(path_value(z1, 1.0, PathParameter::constant, Rational(1, 11))) <= 1e-12);
  CHECK_THROWS(solve_path_1d(z1, 1.5));
  CHECK_THROWS(solve_path_1d(model_of("P2-fiber"), 0.5));
}

TEST_CASE("boundary parameter on Z2") {
  auto t = find_tau0(model_of("Z2"));
  REQUIRE(t.found);
  CHECK(std::abs(t.tau0 - oracle::Z2_tau0) <= 1e-6);
  CHECK(t.tau0 > 0);
  CHECK(t.tau0 < 1);
  CHECK(std::abs(t.value) <= 1e-11);
  CHECK(t.b1 == Rational(-31, 19));
  REQUIRE(t.field.k_vertices_exact);
  // dual vertices in ascending order: z = -1, then z = 1
  CHECK((*t.field.k_vertices_exact)[0] == Rational(43, 19));
  CHECK((*t.field.k_vertices_exact)[1] == Rational(-1));
}

TEST_CASE("general solver") {
  auto z1 = solve_general(model_of("Z1"), SigmaProfile::tau_mix(1.0), {0.0});
  CHECK(z1.converged);
  CHECK(z1.residual <= 1e-10);
  CHECK(std::abs((*z1.c)[0] - 6 * oracle::Z1_root_1) <= 1e-9);
  auto z2 = solve_general(model_of("Z2"), SigmaProfile::tau_mix(1.0), {0.0});
  CHECK_FALSE(z2.converged);
  CHECK(z2.boundary_obstruction);
  CHECK(z2.margin_alpha <= 1e-6);
}
