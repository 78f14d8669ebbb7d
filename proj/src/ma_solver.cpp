#include <ksm/ma_solver.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace ksm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// s log sum_a exp(lw_a + <a, y> / s) with gradient and centered Hessian.
struct ScaledLSE {
  double value = 0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

ScaledLSE scaled_lse(const std::vector<Point>& pts, const std::vector<double>& lw, double s,
                     const Eigen::VectorXd& y) {
  const int l = static_cast<int>(y.size());
  std::vector<double> e(pts.size(), -kInf);
  double mx = -kInf;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (lw[i] == -kInf) continue;
    double v = 0;
    for (int k = 0; k < l; ++k) v += pts[i][k] * y[k];
    e[i] = lw[i] + v / s;
    mx = std::max(mx, e[i]);
  }
  double total = 0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(l);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (e[i] == -kInf) continue;
    const double w = std::exp(e[i] - mx);
    total += w;
    for (int k = 0; k < l; ++k) mean[k] += w * pts[i][k];
  }
  mean /= total;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(l, l);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (e[i] == -kInf) continue;
    const double w = std::exp(e[i] - mx) / total;
    Eigen::VectorXd d(l);
    for (int k = 0; k < l; ++k) d[k] = pts[i][k] - mean[k];
    cov += w * d * d.transpose();
  }
  return {s * (mx + std::log(total)), mean, cov / s};
}

// Legendre dual of scaled_lse at z: sup over |y|_inf <= cap of <y, z> - U(y).
// Boundary points of the gradient image are reached only at infinity; the cap
// makes the value exact up to e^{-cap / s}.
double scaled_lse_dual(const std::vector<Point>& pts, const std::vector<double>& lw, double s,
                       const Point& z, double cap = 60) {
  const int l = static_cast<int>(z.size());
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), l);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(l);
  auto objective = [&](const Eigen::VectorXd& x) { return x.dot(zv) - scaled_lse(pts, lw, s, x).value; };
  double best = objective(y);
  for (int it = 0; it < 200; ++it) {
    const auto L = scaled_lse(pts, lw, s, y);
    const Eigen::VectorXd r = zv - L.grad;
    if (r.norm() < 1e-14) break;
    Eigen::MatrixXd H = L.hess;
    H.diagonal().array() += 1e-300 + 1e-15 * H.trace();
    Eigen::VectorXd d = H.ldlt().solve(r);
    if (!d.allFinite()) d = r;
    bool moved = false;
    for (double t = 1; t > 1e-12; t *= 0.5) {
      Eigen::VectorXd cand = (y + t * d).cwiseMax(-cap).cwiseMin(cap);
      const double v = objective(cand);
      if (v > best) {
        best = v;
        y = cand;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return best;
}

std::vector<Point> lattice_points_d(const DualPolytope& dual) {
  std::vector<Point> out;
  for (const auto& a : dual.lattice_points) {
    Point p;
    for (auto v : a) p.push_back(static_cast<double>(v));
    out.push_back(std::move(p));
  }
  return out;
}

// Dimension of the face {k = alpha} of P*, -1 when k stays above alpha.
int zero_set_dimension(const DingContext& ctx) {
  const double alpha = ctx.profile.alpha();
  if (!std::isfinite(alpha)) return -1;
  const double tol = boundary_tolerance(ctx.profile, ctx.field);
  int count = 0;
  for (std::size_t v = 0; v < ctx.model.dual.vertices_d.size(); ++v) {
    const double kv = ctx.field.k_vertices_exact
                          ? (*ctx.field.k_vertices_exact)[v].convert_to<double>()
                          : ctx.field.k(ctx.model.dual.vertices_d[v]);
    if (std::abs(kv - alpha) <= tol) ++count;
  }
  if (count == 0) return -1;
  // k is affine, so the zero set is a face; its vertex count fixes the dimension for l <= 2.
  return std::min(count - 1, ctx.model.dimension());
}

double holder_estimate(const ConvexDualGrid& u) {
  const DualMesh& mesh = *u.mesh;
  std::vector<double> lx, ly;
  auto record = [&](double scale, double osc) {
    if (osc > 0) {
      lx.push_back(std::log(scale));
      ly.push_back(std::log(osc));
    }
  };
  if (mesh.dimension == 1) {
    const int n = static_cast<int>(mesh.size());
    for (int step = 1; step <= (n - 1) / 8; step *= 2) {
      double osc = 0;
      for (int i = 0; i + step < n; ++i) osc = std::max(osc, std::abs(u.values[i + step] - u.values[i]));
      record(mesh.nodes[step][0] - mesh.nodes[0][0], osc);
    }
  } else {
    const int N = 1 << mesh.level;
    for (int step = 1; step <= N / 8; step *= 2) {
      double osc = 0, scale = 0;
      for (std::size_t c = 0; c < mesh.cone_tables.size(); ++c) {
        const auto& tab = mesh.cone_tables[c];
        auto id = [&](int i, int j) { return tab[i * (N + 1) + j]; };
        for (int i = 0; i <= N; ++i)
          for (int j = 0; i + j <= N; ++j) {
            const int a = id(i, j);
            for (auto [di, dj] : {std::pair{step, 0}, std::pair{0, step}}) {
              if (i + di + j + dj > N) continue;
              const int b = id(i + di, j + dj);
              osc = std::max(osc, std::abs(u.values[a] - u.values[b]));
              scale = std::max(scale, std::hypot(mesh.nodes[a][0] - mesh.nodes[b][0],
                                                 mesh.nodes[a][1] - mesh.nodes[b][1]));
            }
          }
      }
      record(scale, osc);
    }
  }
  if (lx.size() < 2) return 0;
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

struct Evaluation {
  LegendreCells cells;
  double D = 0;
  Eigen::VectorXd grad;
};

Evaluation evaluate(const ConvexDualGrid& u, const DingContext& ctx) {
  Evaluation e{legendre_cells(u), 0, {}};
  const int n = static_cast<int>(u.values.size());
  e.grad.resize(n);
  double lin = 0;
  for (int i = 0; i < n; ++i) {
    lin += ctx.g_nodal[i] * u.values[i];
    e.grad[i] = ctx.g_nodal[i] - e.cells.prob[i];
  }
  e.D = lin - e.cells.log_mass;
  return e;
}

// Newton direction for H = L - diag(p) + p p^T under the gauge constraints
// sum d_i = 0 and sum d_i z_i = 0.
Eigen::VectorXd newton_direction(const Evaluation& e, const DualMesh& mesh) {
  const int n = static_cast<int>(mesh.size());
  const int l = mesh.dimension;
  const int m = n + l + 1;
  std::vector<double> diag(n, 0.0);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& f : e.cells.interfaces) {
    trip.emplace_back(f.i, f.j, -f.weight);
    trip.emplace_back(f.j, f.i, -f.weight);
    diag[f.i] += f.weight;
    diag[f.j] += f.weight;
  }
  double typical = 0;
  int active = 0;
  for (int i = 0; i < n; ++i) {
    diag[i] -= e.cells.prob[i];
    if (diag[i] > 0) {
      typical += diag[i];
      ++active;
    }
  }
  typical = active ? typical / active : 1.0;
  for (int i = 0; i < n; ++i) {
    // Nodes without a cell get a plain gradient step of typical size.
    if (diag[i] <= 1e-14 * typical) diag[i] = typical;
    trip.emplace_back(i, i, diag[i]);
    trip.emplace_back(i, n, 1.0);
    trip.emplace_back(n, i, 1.0);
    for (int k = 0; k < l; ++k) {
      trip.emplace_back(i, n + 1 + k, mesh.nodes[i][k]);
      trip.emplace_back(n + 1 + k, i, mesh.nodes[i][k]);
    }
  }
  Eigen::SparseMatrix<double> M(m, m);
  M.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success) return -e.grad;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m), pv = Eigen::VectorXd::Zero(m);
  rhs.head(n) = -e.grad;
  for (int i = 0; i < n; ++i) pv[i] = e.cells.prob[i];
  const Eigen::VectorXd x = lu.solve(rhs);
  const Eigen::VectorXd y = lu.solve(pv);
  const Eigen::VectorXd d = x - y * (pv.dot(x) / (1 + pv.dot(y)));
  if (!d.allFinite()) return -e.grad;
  return d.head(n);
}

std::string regularity_note(int zero_dim, int l) {
  if (zero_dim < 0) return "uniform: weight positive on P*, smooth solution";
  std::ostringstream os;
  os << "zero set of dimension " << zero_dim;
  if (2 * zero_dim <= l) os << " <= l/2: smooth expected";
  else os << " > l/2: weak solution, smoothness not asserted";
  return os.str();
}

}  // namespace

ConvexDualGrid reference_dual_grid(const KSMModel& model, DualMeshPtr mesh) {
  const auto pts = lattice_points_d(model.dual);
  const std::vector<double> lw(pts.size(), 0.0);
  return sample_dual(mesh, [&](std::span<const double> z) {
    return scaled_lse_dual(pts, lw, 1.0, Point(z.begin(), z.end()));
  });
}

MASolution minimize_ding(const DingContext& ctx, std::optional<ConvexDualGrid> init,
                         const MAOptions& options) {
  const Verdict verdict = stability_verdict(ctx.gstats, ctx.profile, ctx.field);
  if (verdict.kind == Stability::unstable)
    throw UnstableInput("refusing to solve: configuration is unstable (|b_g| = " +
                            std::to_string(verdict.barycenter_norm) + ")",
                        verdict);
  MASolution sol;
  sol.non_uniform = verdict.kind == Stability::polystable_non_uniform;
  const double tol = options.tolerance > 0 ? options.tolerance : (sol.non_uniform ? 1e-3 : 1e-4);
  ConvexDualGrid u = convexify(init ? *init : reference_dual_grid(ctx.model, ctx.mesh));
  if (u.mesh != ctx.mesh) throw InvalidInput("initial grid uses a different mesh");
  Evaluation cur = evaluate(u, ctx);
  sol.ding_initial = cur.D;
  sol.history.push_back(cur.D);
  auto residual = [](const Evaluation& e) { return 0.5 * e.grad.lpNorm<1>(); };
  int it = 0;
  for (; it < options.max_iterations && residual(cur) > tol; ++it) {
    Eigen::VectorXd d = newton_direction(cur, *ctx.mesh);
    double slope = cur.grad.dot(d);
    if (!(slope < 0)) {
      d = -cur.grad;
      slope = -cur.grad.squaredNorm();
    }
    bool accepted = false;
    for (double t = 1; t > 1e-10; t *= 0.5) {
      ConvexDualGrid cand = u;
      for (std::size_t i = 0; i < cand.values.size(); ++i) cand.values[i] += t * d[i];
      cand = convexify(cand);
      Evaluation next;
      try {
        next = evaluate(cand, ctx);
      } catch (const WindowTooSmall&) {
        continue;
      }
      if (next.D <= cur.D + 1e-4 * t * slope) {
        u = std::move(cand);
        cur = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    sol.history.push_back(cur.D);
  }
  sol.iterations = it;
  sol.residual = residual(cur);
  sol.residual_sup = cur.grad.lpNorm<Eigen::Infinity>();
  sol.converged = sol.residual <= tol;
  sol.ding_value = cur.D;
  sol.shift = cur.cells.log_mass - std::log(ctx.gstats.volume);
  for (double& v : u.values) v -= sol.shift;
  sol.normalized_mass = std::exp(cur.cells.log_mass - sol.shift);
  const int l = ctx.mesh->dimension;
  sol.pushforward_barycenter.assign(l, 0.0);
  for (std::size_t i = 0; i < u.values.size(); ++i)
    for (int k = 0; k < l; ++k) sol.pushforward_barycenter[k] += cur.cells.prob[i] * ctx.mesh->nodes[i][k];
  sol.u = std::move(u);
  sol.coverage = alexandrov_measure(sol.u, ctx).total;
  sol.zero_set_dimension = zero_set_dimension(ctx);
  sol.regularity_note = regularity_note(sol.zero_set_dimension, l);
  sol.holder_exponent = holder_estimate(sol.u);
  return sol;
}

AlexandrovMeasure alexandrov_measure(const ConvexDualGrid& u, const DingContext& ctx) {
  double scale = 1;
  for (double v : u.values) scale = std::max(scale, std::abs(v));
  if (convexity_defect(u) > 1e-9 * scale) throw InvalidInput("grid values are not convex");
  const auto grading = sigma_grading(ctx.profile, ctx.field);
  auto g = [&](std::span<const double> z) { return g_value(ctx.model, ctx.profile, ctx.field, z); };
  const auto& nodes = u.mesh->nodes;
  AlexandrovMeasure out;
  for (const auto& corner : primal_vertices(u)) {
    double mass;
    if (u.mesh->dimension == 1) {
      mass = integrate_interval(nodes[corner.nodes[0]][0], nodes[corner.nodes[1]][0], g, 2, grading);
    } else {
      const std::array<Point, 3> tri{nodes[corner.nodes[0]], nodes[corner.nodes[1]], nodes[corner.nodes[2]]};
      mass = integrate_triangle(tri, g, 1, grading);
    }
    out.points.push_back(corner.y);
    out.masses.push_back(mass / ctx.gstats.volume);
    out.total += out.masses.back();
  }
  return out;
}

double ode_residual_1d(const ConvexDualGrid& u, const DingContext& ctx, double interior) {
  if (u.mesh->dimension != 1) throw UnsupportedDimension("the dual ODE residual is one-dimensional");
  const auto& z = u.mesh->nodes;
  const auto& w = u.values;
  double worst = 0;
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    if (std::abs(z[i][0]) > interior) continue;
    const double h = z[i + 1][0] - z[i][0];
    const double w2 = (w[i + 1] - 2 * w[i] + w[i - 1]) / (h * h);
    const double w1 = (w[i + 1] - w[i - 1]) / (2 * h);
    const double rhs = g_value(ctx.model, ctx.profile, ctx.field, z[i]) * std::exp(z[i][0] * w1 - w[i]);
    worst = std::max(worst, std::abs(w2 - rhs));
  }
  return worst;
}

Subsolution build_subsolution(const DingContext& ctx, double window, int samples_per_axis) {
  const double alpha = ctx.profile.alpha();
  const int l = ctx.mesh->dimension;
  SubsolutionCheck check;
  check.A = ctx.gstats.A;
  check.window = window;
  if (std::isfinite(alpha)) {
    const auto growth = check_growth(ctx.profile, ctx.field.k_max - alpha);
    if (!growth.holds) throw DomainError("growth bound f(t) >= A0 (t - alpha) unavailable: " + growth.detail);
    check.a0 = growth.a0;
  }
  // Half-scale lattice log-sum-exp: its Hessian decays like e^{-|y|/2}, which
  // absorbs a weight vanishing linearly on a face of P*.
  const auto pts = lattice_points_d(ctx.model.dual);
  const std::vector<double> lw(pts.size(), 0.0);
  const double s = 2.0;
  check.log_weights = lw;
  if (samples_per_axis <= 0) samples_per_axis = l == 1 ? 801 : 121;
  check.samples = 0;
  double worst = -kInf, worst_bound = -kInf, min_det = kInf;
  const int m = samples_per_axis;
  const int total = l == 1 ? m : m * m;
  for (int idx = 0; idx < total; ++idx) {
    Eigen::VectorXd y(l);
    y[0] = -window + 2 * window * (idx % m) / (m - 1);
    if (l == 2) y[1] = -window + 2 * window * (idx / m) / (m - 1);
    const auto L = scaled_lse(pts, lw, s, y);
    const double det = L.hess.determinant();
    min_det = std::min(min_det, det);
    const Point z(L.grad.data(), L.grad.data() + l);
    const double g = g_value(ctx.model, ctx.profile, ctx.field, z);
    // Lower bound on g used in the argument: h A0 (k - alpha), or h A.
    const double g_low = std::isfinite(alpha)
                             ? h_value(ctx.model, z) * check.a0 * std::max(ctx.field.k(z) - alpha, 0.0)
                             : h_value(ctx.model, z) * check.A;
    worst = std::max(worst, -L.value - std::log(g) - std::log(det));
    worst_bound = std::max(worst_bound, -L.value - std::log(g_low) - std::log(det));
    ++check.samples;
  }
  check.strictly_convex = min_det > 0;
  check.C = std::exp(worst);
  check.holds = std::isfinite(check.C) && check.C > 0 && check.strictly_convex;
  std::ostringstream os;
  os << "u_sub = 2 log sum_a e^{<a,y>/2} over " << pts.size() << " lattice points; C with the growth bound "
     << std::exp(worst_bound) << "; min det " << min_det;
  check.detail = os.str();
  Subsolution out;
  out.u = sample_dual(ctx.mesh, [&](std::span<const double> z) {
    return scaled_lse_dual(pts, lw, s, Point(z.begin(), z.end()));
  });
  out.check = std::move(check);
  return out;
}

std::string primal_csv(const ConvexDualGrid& u, double Y, int samples) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (u.mesh->dimension == 1) {
    os << "y,u,du\n";
    for (int i = 0; i < samples; ++i) {
      const double y = -Y + 2 * Y * i / (samples - 1);
      double best = -kInf, slope = 0;
      for (std::size_t k = 0; k < u.values.size(); ++k) {
        const double v = y * u.mesh->nodes[k][0] - u.values[k];
        if (v > best) {
          best = v;
          slope = u.mesh->nodes[k][0];
        }
      }
      os << y << ',' << best << ',' << slope << '\n';
    }
  } else {
    os << "y1,y2,u\n";
    for (int i = 0; i < samples; ++i)
      for (int j = 0; j < samples; ++j) {
        const Point y{-Y + 2 * Y * i / (samples - 1), -Y + 2 * Y * j / (samples - 1)};
        os << y[0] << ',' << y[1] << ',' << u.primal(y) << '\n';
      }
  }
  return os.str();
}

std::string dual_csv(const ConvexDualGrid& u) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << (u.mesh->dimension == 1 ? "z,u_dual\n" : "z1,z2,u_dual\n");
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    for (double c : u.mesh->nodes[i]) os << c << ',';
    os << u.values[i] << '\n';
  }
  return os.str();
}

}  // namespace ksm
