#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ksm/datasets.hpp>
#include <ksm/errors.hpp>
#include <ksm/field_solver.hpp>
#include <ksm/ma_solver.hpp>

#include <oracle_values.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace ksm;

namespace {

KSMModel model_of(const char* name) { return make_model(builtin_dataset(name)); }

DingContext product_context(int level) {
  auto m = model_of("product");
  auto f = normalize_field({0.0}, h_stats(m), m.dual);
  return make_ding_context(m, SigmaProfile::constant(0), f, make_dual_mesh(m.dual, level));
}

DingContext soliton_context(const char* name) {
  auto m = model_of(name);
  auto f = normalize_field(*solve_soliton(m).c, h_stats(m), m.dual);
  return make_ding_context(m, SigmaProfile::linear(), f, make_dual_mesh(m.dual, default_mesh_level(m.dimension())));
}

// 2 log cosh(y/2) + log 2: the normalized solution for P = [-1, 1], h = g = 1.
double product_potential(double y) { return 2 * std::log(std::cosh(y / 2)) + std::log(2.0); }

void check_solution(const MASolution& s, const DingContext& ctx) {
  CHECK(s.converged);
  CHECK(s.residual <= 1e-4);
  CHECK(std::abs(s.normalized_mass - ctx.gstats.volume) <= 1e-4 * ctx.gstats.volume);
  for (double b : s.pushforward_barycenter) CHECK(std::abs(b) <= 1e-4);
  for (std::size_t i = 1; i < s.history.size(); ++i) CHECK(s.history[i] <= s.history[i - 1] + 1e-12);
  CHECK(s.ding_value <= s.ding_initial + 1e-12);
  CHECK(s.coverage > 0.99);
}

}  // namespace

TEST_CASE("product: closed-form solution") {
  auto ctx = product_context(9);
  auto s = minimize_ding(ctx);
  check_solution(s, ctx);
  CHECK(std::abs(s.ding_value - oracle::product_D) <= 1e-4);
  double err = 0;
  for (double y = -6; y <= 6; y += 0.01) {
    const double yy[] = {y};
    err = std::max(err, std::abs(s.u.primal(yy) - product_potential(y)));
  }
  CHECK(err <= 1e-3);
  CHECK(ode_residual_1d(s.u, ctx) <= 1e-4);
  CHECK_FALSE(s.non_uniform);
  CHECK(s.regularity_note.find("uniform") != std::string::npos);
}

TEST_CASE("product: dual ODE residual decreases under refinement") {
  double prev = 1e9;
  for (int level : {7, 8, 9}) {
    auto ctx = product_context(level);
    const double r = ode_residual_1d(minimize_ding(ctx).u, ctx);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("reference potential is not a solution") {
  auto ctx = product_context(9);
  CHECK(ode_residual_1d(reference_dual_grid(ctx.model, ctx.mesh), ctx) > 0.5);
}

TEST_CASE("Alexandrov measure") {
  auto ctx = product_context(8);
  auto zero = sample_dual(ctx.mesh, [](std::span<const double>) { return 0.0; });
  auto a = alexandrov_measure(zero, ctx);
  REQUIRE(a.points.size() == 1);
  CHECK(std::abs(a.points[0][0]) <= 1e-12);
  CHECK(a.masses[0] == doctest::Approx(1.0).epsilon(1e-12));

  auto s = minimize_ding(ctx);
  auto m = alexandrov_measure(s.u, ctx);
  CHECK(std::abs(m.total - 1) <= 1e-6);
  // distribution of corners against the normalized density e^{-u} / 2
  std::vector<std::size_t> order(m.points.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, [&](auto i, auto j) { return m.points[i][0] < m.points[j][0]; });
  double cdf = 0, worst = 0;
  for (auto i : order) {
    cdf += m.masses[i];
    const double y = m.points[i][0];
    if (std::abs(y) < 6) worst = std::max(worst, std::abs(cdf - (1 + std::tanh(y / 2)) / 2));
  }
  CHECK(worst <= 1e-2);

  auto bumpy = zero;
  bumpy.values[bumpy.values.size() / 2] = 1.0;
  CHECK_THROWS_AS(alexandrov_measure(bumpy, ctx), InvalidInput);
}

TEST_CASE("soliton configurations") {
  for (const char* name : {"Z1", "Z2"}) {
    CAPTURE(name);
    auto ctx = soliton_context(name);
    auto s = minimize_ding(ctx);
    check_solution(s, ctx);
    CHECK(ode_residual_1d(s.u, ctx) <= 5e-3);
    auto sub = build_subsolution(ctx);
    CHECK(sub.check.holds);
    CHECK(sub.check.strictly_convex);
    CHECK(sub.check.C > 0);
  }
}

TEST_CASE("P2 fiber") {
  auto ctx = soliton_context("P2-fiber");
  auto s = minimize_ding(ctx);
  check_solution(s, ctx);
  auto m = alexandrov_measure(s.u, ctx);
  CHECK(std::abs(m.total - 1) <= 1e-3);
}

TEST_CASE("unstable input is refused") {
  auto m = model_of("Z1");
  auto f = normalize_field({0.0}, h_stats(m), m.dual);
  auto ctx = make_ding_context(m, SigmaProfile::constant(0), f, make_dual_mesh(m.dual, 7));
  try {
    minimize_ding(ctx);
    FAIL("expected UnstableInput");
  } catch (const UnstableInput& e) {
    CHECK(e.verdict.kind == Stability::unstable);
    CHECK(e.verdict.destabilizer);
  }
}

TEST_CASE("non-uniform boundary configuration") {
  auto m = model_of("Z2");
  auto t = find_tau0(m);
  REQUIRE(t.found);
  auto ctx = make_ding_context(m, SigmaProfile::tau_mix(t.tau0), t.field, make_dual_mesh(m.dual, 9));
  auto s = minimize_ding(ctx);
  CHECK(s.non_uniform);
  CHECK(s.converged);
  CHECK(s.residual <= 1e-3);
  CHECK(s.zero_set_dimension == 0);
  CHECK(s.regularity_note.find("smooth expected") != std::string::npos);
  CHECK(std::abs(s.normalized_mass - ctx.gstats.volume) <= 1e-4 * ctx.gstats.volume);
  auto sub = build_subsolution(ctx);
  CHECK(sub.check.holds);
  CHECK(sub.check.C > 0);
  CHECK(std::isfinite(sub.check.C));
  CHECK(sub.check.a0 > 0);
  // constant bounded as the window grows
  auto wide = build_subsolution(ctx, 20);
  CHECK(wide.check.C <= 2 * sub.check.C);
}

TEST_CASE("plot data") {
  auto ctx = product_context(6);
  auto s = minimize_ding(ctx);
  auto primal = primal_csv(s.u, 5, 11);
  CHECK(std::ranges::count(primal, '\n') >= 11);
  auto dual = dual_csv(s.u);
  CHECK(std::ranges::count(dual, '\n') >= static_cast<long>(ctx.mesh->size()));
}
