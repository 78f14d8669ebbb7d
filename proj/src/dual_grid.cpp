#include <ksm/dual_grid.hpp>
#include <ksm/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace ksm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Vec2 = std::array<double, 2>;

long long lcm_of_denominators(const DualPolytope& dual) {
  long long d = 1;
  for (const auto& v : dual.vertices)
    for (const auto& q : v) {
      const auto den = boost::multiprecision::denominator(q).convert_to<long long>();
      d = std::lcm(d, den);
    }
  return d;
}

DualMeshPtr mesh_1d(const DualPolytope& dual, int level) {
  auto mesh = std::make_shared<DualMesh>();
  mesh->dimension = 1;
  mesh->level = level;
  const double lo = std::min(dual.vertices_d[0][0], dual.vertices_d[1][0]);
  const double hi = std::max(dual.vertices_d[0][0], dual.vertices_d[1][0]);
  // Each of the two cones [lo, 0] and [0, hi] gets 2^(level-1) intervals.
  const int per_cone = 1 << std::max(level - 1, 0);
  for (int i = per_cone; i >= 1; --i) mesh->nodes.push_back({lo * i / per_cone});
  mesh->origin_node = static_cast<int>(mesh->nodes.size());
  mesh->nodes.push_back({0.0});
  for (int i = 1; i <= per_cone; ++i) mesh->nodes.push_back({hi * i / per_cone});
  const int n = static_cast<int>(mesh->nodes.size());
  mesh->neighbors.resize(n);
  mesh->boundary.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    if (i > 0) mesh->neighbors[i].push_back(i - 1);
    if (i + 1 < n) mesh->neighbors[i].push_back(i + 1);
  }
  mesh->boundary.front() = mesh->boundary.back() = 1;
  for (const auto& v : dual.vertices_d) mesh->vertex_nodes.push_back(v[0] < 0 ? 0 : n - 1);
  return mesh;
}

DualMeshPtr mesh_2d(const DualPolytope& dual, int level) {
  auto mesh = std::make_shared<DualMesh>();
  mesh->dimension = 2;
  mesh->level = level;
  const int N = 1 << level;
  const double scale = static_cast<double>(N) * static_cast<double>(lcm_of_denominators(dual));
  std::map<std::pair<long long, long long>, int> index;
  auto node_at = [&](const Point& z) {
    const std::pair<long long, long long> key{std::llround(z[0] * scale), std::llround(z[1] * scale)};
    auto [it, inserted] = index.emplace(key, static_cast<int>(mesh->nodes.size()));
    if (inserted) {
      mesh->nodes.push_back(z);
      mesh->boundary.push_back(0);
    }
    return it->second;
  };
  for (const auto& cone : dual.cones) {
    const Point& p = dual.vertices_d[cone[0]];
    const Point& q = dual.vertices_d[cone[1]];
    mesh->cone_edges.push_back({p, q});
    std::vector<int> table((N + 1) * (N + 1), -1);
    for (int i = 0; i <= N; ++i)
      for (int j = 0; i + j <= N; ++j) {
        const double s = static_cast<double>(i) / N, t = static_cast<double>(j) / N;
        const int id = node_at({s * p[0] + t * q[0], s * p[1] + t * q[1]});
        table[i * (N + 1) + j] = id;
        if (i + j == N) mesh->boundary[id] = 1;
      }
    auto at = [&](int i, int j) { return table[i * (N + 1) + j]; };
    for (int i = 0; i < N; ++i)
      for (int j = 0; i + j < N; ++j) {
        mesh->triangles.push_back({at(i, j), at(i + 1, j), at(i, j + 1)});
        if (i + j + 2 <= N) mesh->triangles.push_back({at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
      }
    mesh->cone_tables.push_back(std::move(table));
  }
  const int n = static_cast<int>(mesh->nodes.size());
  std::vector<std::set<int>> adj(n);
  for (const auto& t : mesh->triangles)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (a != b) adj[t[a]].insert(t[b]);
  for (const auto& s : adj) mesh->neighbors.emplace_back(s.begin(), s.end());
  for (std::size_t v = 0; v < dual.vertices_d.size(); ++v) {
    mesh->vertex_nodes.push_back(node_at(dual.vertices_d[v]));
    std::vector<Point> rays;
    for (std::size_t f = 0; f < dual.facets.size(); ++f)
      if (std::find(dual.facets[f].begin(), dual.facets[f].end(), static_cast<int>(v)) != dual.facets[f].end())
        rays.push_back({static_cast<double>(dual.normals[f][0]), static_cast<double>(dual.normals[f][1])});
    if (rays.size() != 2) throw InvalidInput("dual vertex is not incident to exactly two facets");
    mesh->vertex_rays.push_back({rays[0], rays[1]});
  }
  mesh->origin_node = node_at({0.0, 0.0});
  return mesh;
}

}  // namespace

DualMeshPtr make_dual_mesh(const DualPolytope& dual, int level) {
  if (level < 0) throw InvalidInput("mesh level must be nonnegative");
  if (dual.dimension == 1) return mesh_1d(dual, level);
  if (dual.dimension == 2) return mesh_2d(dual, level);
  throw UnsupportedDimension("dual meshes support dimensions 1 and 2 only");
}

double DualMesh::interpolate(std::span<const double> values, std::span<const double> z) const {
  if (dimension == 1) {
    const double x = z[0];
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x,
                               [](double v, const Point& p) { return v < p[0]; });
    std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
    if (hi == 0) hi = 1;
    if (hi >= nodes.size()) hi = nodes.size() - 1;
    const std::size_t lo = hi - 1;
    const double t = (x - nodes[lo][0]) / (nodes[hi][0] - nodes[lo][0]);
    if (t < -1e-12 || t > 1 + 1e-12) throw DomainError("interpolation point outside P*");
    return (1 - t) * values[lo] + t * values[hi];
  }
  const int N = 1 << level;
  for (std::size_t c = 0; c < cone_edges.size(); ++c) {
    const Point& p = cone_edges[c][0];
    const Point& q = cone_edges[c][1];
    const double det = p[0] * q[1] - p[1] * q[0];
    const double s = (z[0] * q[1] - z[1] * q[0]) / det;
    const double t = (p[0] * z[1] - p[1] * z[0]) / det;
    const double eps = 1e-12;
    if (s < -eps || t < -eps || s + t > 1 + eps) continue;
    const double fs_all = std::clamp(s, 0.0, 1.0) * N;
    const double ft_all = std::clamp(t, 0.0, 1.0) * N;
    int i0 = std::min(static_cast<int>(std::floor(fs_all)), N);
    int j0 = std::min(static_cast<int>(std::floor(ft_all)), N - i0);
    const auto& table = cone_tables[c];
    auto at = [&](int i, int j) { return values[table[i * (N + 1) + j]]; };
    if (i0 + j0 >= N) return at(i0, N - i0);
    double fs = fs_all - i0, ft = ft_all - j0;
    if (fs + ft <= 1.0) return (1 - fs - ft) * at(i0, j0) + fs * at(i0 + 1, j0) + ft * at(i0, j0 + 1);
    return (fs + ft - 1) * at(i0 + 1, j0 + 1) + (1 - fs) * at(i0, j0 + 1) + (1 - ft) * at(i0 + 1, j0);
  }
  throw DomainError("interpolation point outside P*");
}

double ConvexDualGrid::effective_window() const {
  if (window > 0) return window;
  return mesh->dimension == 1 ? 40.0 : 20.0;
}

double ConvexDualGrid::primal(std::span<const double> y) const {
  double best = -kInf;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double s = -values[i];
    for (int k = 0; k < mesh->dimension; ++k) s += y[k] * mesh->nodes[i][k];
    best = std::max(best, s);
  }
  return best;
}

ConvexDualGrid sample_dual(DualMeshPtr mesh, const std::function<double(std::span<const double>)>& f) {
  ConvexDualGrid g;
  g.values.reserve(mesh->size());
  for (const auto& z : mesh->nodes) g.values.push_back(f(z));
  g.mesh = std::move(mesh);
  return g;
}

std::vector<double> hat_weights(const DualMesh& mesh, const ScalarIntegrand& weight,
                                const std::optional<Grading>& grading, int refinement) {
  std::vector<double> out(mesh.size(), 0.0);
  if (mesh.dimension == 1) {
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
      const double a = mesh.nodes[i][0], b = mesh.nodes[i + 1][0];
      VectorIntegrand f = [&](std::span<const double> z, std::span<double> o) {
        const double w = weight(z);
        const double t = (z[0] - a) / (b - a);
        o[0] = w * (1 - t);
        o[1] = w * t;
      };
      const auto r = integrate_interval(a, b, f, 2, refinement, grading);
      out[i] += r[0];
      out[i + 1] += r[1];
    }
    return out;
  }
  for (const auto& tri : mesh.triangles) {
    const Point& A = mesh.nodes[tri[0]];
    const Point& B = mesh.nodes[tri[1]];
    const Point& C = mesh.nodes[tri[2]];
    const double det = (B[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (B[1] - A[1]);
    VectorIntegrand f = [&](std::span<const double> z, std::span<double> o) {
      const double w = weight(z);
      const double s = ((z[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (z[1] - A[1])) / det;
      const double t = ((B[0] - A[0]) * (z[1] - A[1]) - (z[0] - A[0]) * (B[1] - A[1])) / det;
      o[0] = w * (1 - s - t);
      o[1] = w * s;
      o[2] = w * t;
    };
    const std::array<Point, 3> pts{A, B, C};
    const auto r = integrate_triangle(pts, f, 3, refinement, grading);
    for (int k = 0; k < 3; ++k) out[tri[k]] += r[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact integrals of exponentials of affine functions.

namespace {

// (e^a - e^b) / (a - b) divided by e^{max(a, b)}.
double scaled_dd1(double d) {  // d = |a - b|
  if (d < 1e-10) return 1.0 - 0.5 * d;
  return -std::expm1(-d) / d;
}

double dd1(double a, double b) { return std::exp(std::max(a, b)) * scaled_dd1(std::abs(a - b)); }

// Second divided difference of exp at (a, b, c).
double dd2(double a, double b, double c) {
  std::array<double, 3> x{a, b, c};
  std::sort(x.begin(), x.end(), std::greater<>());
  if (x[0] == -kInf) return 0.0;
  if (x[0] - x[2] < 1e-3) {
    const double m = (x[0] + x[1] + x[2]) / 3.0;
    const std::array<double, 3> d{x[0] - m, x[1] - m, x[2] - m};
    double h2 = 0, h3 = 0, h4 = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        h2 += d[i] * d[j];
        for (int k = j; k < 3; ++k) {
          h3 += d[i] * d[j] * d[k];
          for (int l = k; l < 3; ++l) h4 += d[i] * d[j] * d[k] * d[l];
        }
      }
    return std::exp(m) * (0.5 + h2 / 24.0 + h3 / 120.0 + h4 / 720.0);
  }
  return (dd1(x[0], x[1]) - dd1(x[1], x[2])) / (x[0] - x[2]);
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log of the integral of exp(c0 - <y, z>) over a convex polygon.
double log_polygon_exp(const std::vector<Vec2>& poly, double c0, const Point& z) {
  std::vector<double> phi;
  double M = -kInf;
  for (const auto& v : poly) {
    phi.push_back(c0 - v[0] * z[0] - v[1] * z[1]);
    M = std::max(M, phi.back());
  }
  double S = 0;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    const double area2 = std::abs(cross(poly[0], poly[k], poly[k + 1]));
    S += area2 * dd2(phi[0] - M, phi[k] - M, phi[k + 1] - M);
  }
  return S > 0 ? M + std::log(S) : -kInf;
}

// log of the integral of exp(affine) over the segment [p, q] given endpoint exponents.
double log_segment_exp(const Vec2& p, const Vec2& q, double ep, double eq) {
  const double len = std::hypot(q[0] - p[0], q[1] - p[1]);
  if (len == 0) return -kInf;
  return std::log(len) + std::max(ep, eq) + std::log(scaled_dd1(std::abs(ep - eq)));
}

double polygon_area(const std::vector<Vec2>& poly) {
  double a = 0;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) a += cross(poly[0], poly[k], poly[k + 1]);
  return 0.5 * std::abs(a);
}

struct LabeledVertex {
  Vec2 p;
  int label;  // label of the edge from p to the next vertex; -1 = window edge
};
using LabeledPolygon = std::vector<LabeledVertex>;

// Keeps {y : <n, y> + off >= 0}; the new edge is labeled `label`.
LabeledPolygon clip_labeled(const LabeledPolygon& poly, const Vec2& n, double off, int label) {
  LabeledPolygon out;
  const std::size_t m = poly.size();
  for (std::size_t k = 0; k < m; ++k) {
    const auto& P = poly[k];
    const auto& Q = poly[(k + 1) % m];
    const double sp = n[0] * P.p[0] + n[1] * P.p[1] + off;
    const double sq = n[0] * Q.p[0] + n[1] * Q.p[1] + off;
    auto cut = [&] {
      const double t = sp / (sp - sq);
      return Vec2{P.p[0] + t * (Q.p[0] - P.p[0]), P.p[1] + t * (Q.p[1] - P.p[1])};
    };
    if (sp >= 0) {
      out.push_back(P);
      if (sq < 0) out.push_back({cut(), label});
    } else if (sq >= 0) {
      out.push_back({cut(), P.label});
    }
  }
  return out;
}

std::vector<std::vector<int>> rings(const DualMesh& mesh, int depth) {
  const int n = static_cast<int>(mesh.size());
  std::vector<std::vector<int>> out(n);
  std::vector<int> mark(n, -1);
  for (int i = 0; i < n; ++i) {
    std::vector<int> frontier{i};
    mark[i] = i;
    for (int d = 0; d < depth && !frontier.empty(); ++d) {
      std::vector<int> next;
      for (int a : frontier)
        for (int b : mesh.neighbors[a])
          if (mark[b] != i) {
            mark[b] = i;
            next.push_back(b);
            out[i].push_back(b);
          }
      frontier = std::move(next);
    }
  }
  return out;
}

struct Cells2D {
  std::vector<LabeledPolygon> polys;
  double window = 0;
};

// Cells of u clipped to the window box, candidates widened until they tile it.
Cells2D cells_2d(const ConvexDualGrid& u) {
  const DualMesh& mesh = *u.mesh;
  const int n = static_cast<int>(mesh.size());
  const double Y = u.effective_window();
  const double box_area = 4 * Y * Y;
  for (int depth = 2;; depth *= 2) {
    const bool all = depth >= 64 || depth >= n;
    const auto cand = all ? std::vector<std::vector<int>>{} : rings(mesh, depth);
    Cells2D cells;
    cells.window = Y;
    cells.polys.resize(n);
    double area = 0;
    for (int i = 0; i < n; ++i) {
      LabeledPolygon poly{{{-Y, -Y}, -1}, {{Y, -Y}, -1}, {{Y, Y}, -1}, {{-Y, Y}, -1}};
      const Point& zi = mesh.nodes[i];
      auto apply = [&](int j) {
        const Point& zj = mesh.nodes[j];
        poly = clip_labeled(poly, {zi[0] - zj[0], zi[1] - zj[1]}, -(u.values[i] - u.values[j]), j);
      };
      if (all) {
        for (int j = 0; j < n && poly.size() >= 3; ++j)
          if (j != i) apply(j);
      } else {
        for (int j : cand[i]) {
          apply(j);
          if (poly.size() < 3) break;
        }
      }
      std::vector<Vec2> pts;
      for (const auto& v : poly) pts.push_back(v.p);
      const double a = pts.size() >= 3 ? polygon_area(pts) : 0.0;
      if (a <= 1e-14 * box_area) poly.clear();
      else area += a;
      cells.polys[i] = std::move(poly);
    }
    if (std::abs(area - box_area) <= 1e-9 * box_area || all) return cells;
  }
}

LegendreCells cells_1d(const ConvexDualGrid& u) {
  const DualMesh& mesh = *u.mesh;
  const int n = static_cast<int>(mesh.size());
  auto z = [&](int i) { return mesh.nodes[i][0]; };
  const auto& w = u.values;
  // Strict lower hull.
  std::vector<int> hull;
  for (int i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      const double c = (z(b) - z(a)) * (w[i] - w[a]) - (w[b] - w[a]) * (z(i) - z(a));
      if (c <= 0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  const int m = static_cast<int>(hull.size());
  std::vector<double> breaks(m + 1);
  breaks[0] = -kInf;
  breaks[m] = kInf;
  for (int k = 1; k < m; ++k) {
    const int a = hull[k - 1], b = hull[k];
    breaks[k] = (w[b] - w[a]) / (z(b) - z(a));
  }
  const double Y = u.effective_window();
  // log mass of e^{w - y z} on [lo, hi].
  auto log_mass = [](double wk, double zk, double lo, double hi) {
    if (hi <= lo) return -kInf;
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
      const double edge = std::isfinite(lo) ? lo : hi;
      return wk - edge * zk - std::log(std::abs(zk));
    }
    const double elo = wk - lo * zk, ehi = wk - hi * zk;
    return std::log(hi - lo) + std::max(elo, ehi) + std::log(scaled_dd1(std::abs(elo - ehi)));
  };
  std::vector<double> logT(m);
  double logZ = -kInf, logInside = -kInf;
  for (int k = 0; k < m; ++k) {
    const int i = hull[k];
    logT[k] = log_mass(w[i], z(i), breaks[k], breaks[k + 1]);
    logZ = log_add(logZ, logT[k]);
    logInside = log_add(logInside, log_mass(w[i], z(i), std::max(breaks[k], -Y), std::min(breaks[k + 1], Y)));
  }
  LegendreCells out;
  out.log_mass = logZ;
  out.window = Y;
  out.prob.assign(n, 0.0);
  for (int k = 0; k < m; ++k) out.prob[hull[k]] = std::exp(logT[k] - logZ);
  for (int k = 1; k < m; ++k) {
    const int a = hull[k - 1], b = hull[k];
    const double y = breaks[k];
    const double uy = y * z(a) - w[a];
    out.interfaces.push_back({a, b, std::exp(-uy - logZ) / (z(b) - z(a))});
  }
  out.outside_mass = -std::expm1(logInside - logZ);
  out.tail_bound = out.outside_mass;
  return out;
}

// Integral of e^{-<y, p>} over the part of the normal cone at dual vertex v
// lying outside the window. The cone is spanned by the facet normals n1, n2
// through p, and its full integral is |det(n1, n2)| / (<n1, p> <n2, p>).
double cone_tail(const DualMesh& mesh, std::size_t v, double Y) {
  const Point& p = mesh.nodes[mesh.vertex_nodes[v]];
  const Point& n1 = mesh.vertex_rays[v][0];
  const Point& n2 = mesh.vertex_rays[v][1];
  const double det = n1[0] * n2[1] - n1[1] * n2[0];
  const double sgn = det > 0 ? 1.0 : -1.0;
  LabeledPolygon box{{{-Y, -Y}, -1}, {{Y, -Y}, -1}, {{Y, Y}, -1}, {{-Y, Y}, -1}};
  box = clip_labeled(box, {-sgn * n1[1], sgn * n1[0]}, 0.0, 0);
  box = clip_labeled(box, {sgn * n2[1], -sgn * n2[0]}, 0.0, 0);
  std::vector<Vec2> pts;
  for (const auto& x : box) pts.push_back(x.p);
  const double inside = pts.size() >= 3 ? std::exp(log_polygon_exp(pts, 0.0, p)) : 0.0;
  const double full = std::abs(det) / ((n1[0] * p[0] + n1[1] * p[1]) * (n2[0] * p[0] + n2[1] * p[1]));
  return std::max(full - inside, 0.0);
}

LegendreCells cells_2d_full(const ConvexDualGrid& u) {
  const DualMesh& mesh = *u.mesh;
  const int n = static_cast<int>(mesh.size());
  auto cells = cells_2d(u);
  std::vector<double> logT(n, -kInf);
  LegendreCells out;
  out.window = cells.window;
  std::vector<std::tuple<int, int, double>> logIface;
  for (int i = 0; i < n; ++i) {
    const auto& poly = cells.polys[i];
    if (poly.empty()) continue;
    std::vector<Vec2> pts;
    for (const auto& v : poly) pts.push_back(v.p);
    logT[i] = log_polygon_exp(pts, u.values[i], mesh.nodes[i]);
    const Point& zi = mesh.nodes[i];
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const int j = poly[k].label;
      if (j <= i) continue;
      const Vec2& P = poly[k].p;
      const Vec2& Q = poly[(k + 1) % poly.size()].p;
      const double ep = u.values[i] - P[0] * zi[0] - P[1] * zi[1];
      const double eq = u.values[i] - Q[0] * zi[0] - Q[1] * zi[1];
      const double dist = std::hypot(zi[0] - mesh.nodes[j][0], zi[1] - mesh.nodes[j][1]);
      logIface.emplace_back(i, j, log_segment_exp(P, Q, ep, eq) - std::log(dist));
    }
  }
  double logWindow = -kInf;
  for (double t : logT) logWindow = log_add(logWindow, t);
  // Tail beyond the window, bounded per vertex cone and attributed to its vertex cell.
  double logTail = -kInf;
  for (std::size_t v = 0; v < mesh.vertex_nodes.size(); ++v) {
    const double t = cone_tail(mesh, v, cells.window);
    if (t <= 0) continue;
    const int p = mesh.vertex_nodes[v];
    const double lt = u.values[p] + std::log(t);
    logTail = log_add(logTail, lt);
    logT[p] = log_add(logT[p], lt);
  }
  const double rel_tail = std::exp(logTail - logWindow);
  if (rel_tail > 1e-6)
    throw WindowTooSmall("primal tail bound " + std::to_string(rel_tail) +
                         " exceeds 1e-6 of the window integral");
  double logZ = -kInf;
  for (double t : logT) logZ = log_add(logZ, t);
  out.log_mass = logZ;
  out.prob.resize(n);
  for (int i = 0; i < n; ++i) out.prob[i] = std::exp(logT[i] - logZ);
  for (const auto& [i, j, lw] : logIface) out.interfaces.push_back({i, j, std::exp(lw - logZ)});
  out.tail_bound = rel_tail;
  out.outside_mass = std::exp(logTail - logZ);
  return out;
}

}  // namespace

LegendreCells legendre_cells(const ConvexDualGrid& u) {
  if (u.values.size() != u.mesh->size()) throw InvalidInput("grid values do not match the mesh");
  if (u.mesh->dimension == 1) return cells_1d(u);
  if (u.window > 0) return cells_2d_full(u);
  // Automatic window: widen until the tail is negligible.
  ConvexDualGrid wide = u;
  for (wide.window = u.effective_window();; wide.window *= 2) {
    try {
      return cells_2d_full(wide);
    } catch (const WindowTooSmall&) {
      if (wide.window >= 160) throw;
    }
  }
}

namespace {

// Lower envelope of (x_k, w_k), x sorted, evaluated at every x_k.
std::vector<double> envelope_1d(const std::vector<double>& x, const std::vector<double>& w) {
  const int n = static_cast<int>(x.size());
  std::vector<int> hull;
  for (int i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      if ((x[b] - x[a]) * (w[i] - w[a]) - (w[b] - w[a]) * (x[i] - x[a]) <= 0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  std::vector<double> out(w);
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    const int a = hull[k], b = hull[k + 1];
    for (int i = a + 1; i < b; ++i) {
      const double t = (x[i] - x[a]) / (x[b] - x[a]);
      out[i] = (1 - t) * w[a] + t * w[b];
    }
  }
  return out;
}

// Corners of the primal complex inside the window, one per dual triangle.
std::vector<PrimalVertex> corners_2d(const Cells2D& cells) {
  std::vector<PrimalVertex> out;
  std::set<std::array<int, 3>> seen;
  for (std::size_t i = 0; i < cells.polys.size(); ++i) {
    const auto& poly = cells.polys[i];
    const std::size_t m = poly.size();
    for (std::size_t k = 0; k < m; ++k) {
      const int a = poly[(k + m - 1) % m].label;
      const int b = poly[k].label;
      if (a < 0 || b < 0) continue;
      std::array<int, 3> key{static_cast<int>(i), a, b};
      std::sort(key.begin(), key.end());
      if (!seen.insert(key).second) continue;
      out.push_back({{poly[k].p[0], poly[k].p[1]}, key});
    }
  }
  return out;
}

ConvexDualGrid convexify_2d(const ConvexDualGrid& u) {
  const DualMesh& mesh = *u.mesh;
  ConvexDualGrid out = u;
  // Boundary first: on a facet of P* the envelope only sees that facet's nodes.
  const int N = 1 << mesh.level;
  for (std::size_t c = 0; c < mesh.cone_tables.size(); ++c) {
    std::vector<int> ids;
    for (int i = 0; i <= N; ++i) ids.push_back(mesh.cone_tables[c][i * (N + 1) + (N - i)]);
    std::vector<double> x, w;
    for (int id : ids) {
      x.push_back(static_cast<double>(x.size()));
      w.push_back(out.values[id]);
    }
    const auto env = envelope_1d(x, w);
    for (std::size_t k = 0; k < ids.size(); ++k) out.values[ids[k]] = std::min(out.values[ids[k]], env[k]);
  }
  const auto cells = cells_2d(out);
  const int n = static_cast<int>(mesh.size());
  std::vector<char> empty(n, 0);
  for (int i = 0; i < n; ++i) empty[i] = cells.polys[i].empty();
  // Spatial buckets over the nodes.
  double lo[2] = {kInf, kInf}, hi[2] = {-kInf, -kInf};
  for (const auto& z : mesh.nodes)
    for (int k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], z[k]);
      hi[k] = std::max(hi[k], z[k]);
    }
  const int B = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n)) / 2));
  auto bucket = [&](double v, int k) {
    return std::clamp(static_cast<int>((v - lo[k]) / (hi[k] - lo[k]) * B), 0, B - 1);
  };
  std::vector<std::vector<int>> buckets(B * B);
  for (int i = 0; i < n; ++i)
    if (empty[i]) buckets[bucket(mesh.nodes[i][0], 0) * B + bucket(mesh.nodes[i][1], 1)].push_back(i);
  std::vector<double> env(n, -kInf);
  for (const auto& corner : corners_2d(cells)) {
    const Vec2 y{corner.y[0], corner.y[1]};
    const int i = corner.nodes[0];
    const double uy = y[0] * mesh.nodes[i][0] + y[1] * mesh.nodes[i][1] - out.values[i];
    const Point& A = mesh.nodes[corner.nodes[0]];
    const Point& Bp = mesh.nodes[corner.nodes[1]];
    const Point& C = mesh.nodes[corner.nodes[2]];
    const double det = (Bp[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (Bp[1] - A[1]);
    if (std::abs(det) < 1e-300) continue;
    const int x0 = bucket(std::min({A[0], Bp[0], C[0]}), 0), x1 = bucket(std::max({A[0], Bp[0], C[0]}), 0);
    const int y0 = bucket(std::min({A[1], Bp[1], C[1]}), 1), y1 = bucket(std::max({A[1], Bp[1], C[1]}), 1);
    for (int bx = x0; bx <= x1; ++bx)
      for (int by = y0; by <= y1; ++by)
        for (int q : buckets[bx * B + by]) {
          const Point& z = mesh.nodes[q];
          const double s = ((z[0] - A[0]) * (C[1] - A[1]) - (C[0] - A[0]) * (z[1] - A[1])) / det;
          const double t = ((Bp[0] - A[0]) * (z[1] - A[1]) - (z[0] - A[0]) * (Bp[1] - A[1])) / det;
          const double eps = 1e-9;
          if (s < -eps || t < -eps || s + t > 1 + eps) continue;
          env[q] = std::max(env[q], y[0] * z[0] + y[1] * z[1] - uy);
        }
  }
  for (int q = 0; q < n; ++q)
    if (empty[q] && env[q] > -kInf) out.values[q] = std::min(out.values[q], env[q]);
  return out;
}

}  // namespace

ConvexDualGrid convexify(const ConvexDualGrid& u) {
  if (u.mesh->dimension == 1) {
    ConvexDualGrid out = u;
    std::vector<double> x;
    for (const auto& z : u.mesh->nodes) x.push_back(z[0]);
    out.values = envelope_1d(x, u.values);
    return out;
  }
  return convexify_2d(u);
}

double convexity_defect(const ConvexDualGrid& u) {
  const auto env = convexify(u);
  double d = 0;
  for (std::size_t i = 0; i < u.values.size(); ++i) d = std::max(d, u.values[i] - env.values[i]);
  return d;
}

std::vector<PrimalVertex> primal_vertices(const ConvexDualGrid& u) {
  if (u.mesh->dimension == 2) return corners_2d(cells_2d(u));
  const auto& nodes = u.mesh->nodes;
  const auto& w = u.values;
  std::vector<int> hull;
  for (int i = 0; i < static_cast<int>(w.size()); ++i) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      if ((nodes[b][0] - nodes[a][0]) * (w[i] - w[a]) - (w[b] - w[a]) * (nodes[i][0] - nodes[a][0]) <= 0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }
  std::vector<PrimalVertex> out;
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    const int a = hull[k], b = hull[k + 1];
    out.push_back({{(w[b] - w[a]) / (nodes[b][0] - nodes[a][0])}, {a, b, -1}});
  }
  return out;
}

}  // namespace ksm
