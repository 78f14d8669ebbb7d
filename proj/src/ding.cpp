#include <ksm/ding.hpp>
#include <ksm/errors.hpp>
#include <ksm/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ksm {

int default_mesh_level(int dimension) { return dimension == 1 ? 9 : 6; }

namespace {

std::vector<double> normalized(std::vector<double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

DingContext make_ding_context(const KSMModel& model, const SigmaProfile& profile,
                              const FiberField& field, DualMeshPtr mesh) {
  DingContext ctx{model, profile, field, h_stats(model), {}, std::move(mesh), {}, {}};
  ctx.gstats = g_stats(model, profile, field);
  ctx.g_nodal = normalized(hat_weights(
      *ctx.mesh, [&](std::span<const double> z) { return g_value(ctx.model, ctx.profile, ctx.field, z); },
      sigma_grading(profile, field)));
  ctx.h_nodal = normalized(
      hat_weights(*ctx.mesh, [&](std::span<const double> z) { return h_value(ctx.model, z); }));
  return ctx;
}

DingValue ding_functional(const ConvexDualGrid& u, const DingContext& ctx) {
  if (u.mesh != ctx.mesh) throw InvalidInput("grid and context use different meshes");
  const auto cells = legendre_cells(u);
  DingValue d;
  d.linear = std::inner_product(ctx.g_nodal.begin(), ctx.g_nodal.end(), u.values.begin(), 0.0);
  d.log_mass = cells.log_mass;
  d.tail_bound = cells.tail_bound;
  d.value = d.linear - d.log_mass;
  return d;
}

double j_red(const ConvexDualGrid& u, const DingContext& ctx) {
  const double mean = std::inner_product(ctx.h_nodal.begin(), ctx.h_nodal.end(), u.values.begin(), 0.0);
  return mean - u.dual_at(ctx.hstats.barycenter);
}

double j_sigma(const ConvexDualGrid& u, const DingContext& ctx) {
  const double mean = std::inner_product(ctx.g_nodal.begin(), ctx.g_nodal.end(), u.values.begin(), 0.0);
  return mean - u.dual_at(ctx.gstats.barycenter);
}

ConvexDualGrid geodesic_point(const ConvexDualGrid& u0, const PLConvex& phi, double t) {
  if (t < 0) throw DomainError("geodesic time must be nonnegative");
  ConvexDualGrid out = u0;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] += t * (phi(u0.mesh->nodes[i]) - phi.R);
  return out;
}

ConvexDualGrid add_affine(const ConvexDualGrid& u, const Point& a, double b) {
  ConvexDualGrid out = u;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double s = b;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * u.mesh->nodes[i][k];
    out.values[i] += s;
  }
  return out;
}

double support_exp_integral(const DualPolytope& dual) {
  auto mesh = make_dual_mesh(dual, 1);
  ConvexDualGrid zero{mesh, std::vector<double>(mesh->size(), 0.0), 0.0};
  return std::exp(legendre_cells(zero).log_mass);
}

CoercivityEstimate fit_coercivity(const std::vector<std::pair<double, double>>& j_and_d) {
  CoercivityEstimate est;
  if (j_and_d.empty()) return est;
  // Anchor at the minimizer (J*, D_min): every point left of it satisfies
  // D >= D_min >= delta J - C trivially, so delta is the smallest slope
  // from the anchor to the points on its right.
  auto lowest = std::min_element(j_and_d.begin(), j_and_d.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
  const auto [j_star, d_min] = *lowest;
  double j_max = 0;
  for (const auto& [j, d] : j_and_d) j_max = std::max(j_max, j);
  const double j_tol = 1e-9 * (1 + j_max);
  double delta = std::numeric_limits<double>::infinity();
  for (const auto& [j, d] : j_and_d)
    if (j > j_star + j_tol) delta = std::min(delta, (d - d_min) / (j - j_star));
  if (!std::isfinite(delta)) delta = 0;
  est.delta = delta;
  est.C = delta * j_star - d_min;
  est.evidence = delta > 0;
  return est;
}

CoercivityProbe coercivity_probe(const DingContext& ctx, const std::vector<ConvexDualGrid>& samples) {
  CoercivityProbe probe;
  probe.table.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    probe.table[i] = {j_red(samples[i], ctx), j_sigma(samples[i], ctx),
                      ding_functional(samples[i], ctx).value};
  });
  std::vector<std::pair<double, double>> red, sig;
  double j_scale = 0;
  for (const auto& s : probe.table) {
    red.emplace_back(s.j_red, s.ding);
    sig.emplace_back(s.j_sigma, s.ding);
    j_scale = std::max(j_scale, s.j_red);
  }
  probe.against_j_red = fit_coercivity(red);
  probe.against_j_sigma = fit_coercivity(sig);
  // D is constant along translations (J = 0) exactly when b_g = 0; any spread
  // there means D is unbounded below on a J-bounded set.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : probe.table)
    if (s.j_red <= 1e-9 * (1 + j_scale)) {
      lo = std::min(lo, s.ding);
      hi = std::max(hi, s.ding);
    }
  if (hi > lo && hi - lo > 1e-6 * (1 + std::abs(lo))) {
    probe.against_j_red.evidence = false;
    probe.against_j_sigma.evidence = false;
    probe.note = "D varies along samples with J = 0; no coercivity";
  } else if (!probe.against_j_red.evidence) {
    probe.note = "no coercivity evidence against J_red";
  } else {
    probe.note = "coercivity evidence on the sample set";
  }
  return probe;
}

}  // namespace ksm
