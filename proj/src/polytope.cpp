#include <ksm/errors.hpp>
#include <ksm/polytope.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace ksm {

namespace {

using RatMatrix = std::vector<RatPoint>;

Rational determinant(RatMatrix m) {
  const std::size_t n = m.size();
  Rational det = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && m[pivot][col] == 0) ++pivot;
    if (pivot == n) return 0;
    if (pivot != col) {
      std::swap(m[pivot], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      if (m[r][col] == 0) continue;
      Rational f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return det;
}

int rank(RatMatrix m) {
  if (m.empty()) return 0;
  const std::size_t cols = m.front().size();
  int rk = 0;
  for (std::size_t col = 0; col < cols && rk < static_cast<int>(m.size()); ++col) {
    std::size_t pivot = rk;
    while (pivot < m.size() && m[pivot][col] == 0) ++pivot;
    if (pivot == m.size()) continue;
    std::swap(m[pivot], m[rk]);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == static_cast<std::size_t>(rk) || m[r][col] == 0) continue;
      Rational f = m[r][col] / m[rk][col];
      for (std::size_t c = col; c < cols; ++c) m[r][c] -= f * m[rk][c];
    }
    ++rk;
  }
  return rk;
}

// Solves rows * x = rhs for a square nonsingular system.
RatPoint solve(RatMatrix a, RatPoint rhs) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a[pivot][col] == 0) ++pivot;
    if (pivot == n) throw InvalidInput("singular facet system");
    std::swap(a[pivot], a[col]);
    std::swap(rhs[pivot], rhs[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  RatPoint x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / a[i][i];
  return x;
}

// Normal of the hyperplane through the given l points (zero if degenerate).
RatPoint hyperplane_normal(const std::vector<const RatPoint*>& pts, int l) {
  if (l == 1) return {Rational(1)};
  std::vector<RatPoint> rows;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    RatPoint d(l);
    for (int k = 0; k < l; ++k) d[k] = (*pts[i])[k] - (*pts[0])[k];
    rows.push_back(std::move(d));
  }
  if (l == 2) return {rows[0][1], -rows[0][0]};
  const auto& a = rows[0];
  const auto& b = rows[1];
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

bool is_integer(const Rational& q) { return denominator(q) == 1; }

struct Facet {
  std::vector<int> members;
  RatPoint normal;
  Rational offset;  // all points satisfy <normal, x> <= offset
};

std::vector<Facet> enumerate_facets(const std::vector<RatPoint>& pts, int l) {
  const int n = static_cast<int>(pts.size());
  std::map<std::vector<int>, Facet> found;
  std::vector<int> idx(l);
  // Iterate l-subsets in lexicographic order.
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + std::min(l, n), true);
  do {
    std::vector<const RatPoint*> chosen;
    for (int i = 0; i < n; ++i)
      if (mask[i]) chosen.push_back(&pts[i]);
    if (static_cast<int>(chosen.size()) != l) continue;
    RatPoint normal = hyperplane_normal(chosen, l);
    if (std::all_of(normal.begin(), normal.end(), [](const Rational& q) { return q == 0; }))
      continue;
    Rational offset = dot(normal, *chosen[0]);
    int above = 0, below = 0;
    std::vector<int> on;
    for (int j = 0; j < n; ++j) {
      Rational s = dot(normal, pts[j]) - offset;
      if (s > 0) ++above;
      else if (s < 0) ++below;
      else on.push_back(j);
    }
    if (above > 0 && below > 0) continue;
    if (above > 0) {
      for (auto& q : normal) q = -q;
      offset = -offset;
    }
    if (!found.count(on)) found.emplace(on, Facet{on, normal, offset});
  } while (std::prev_permutation(mask.begin(), mask.end()));
  std::vector<Facet> out;
  for (auto& [key, f] : found) out.push_back(std::move(f));
  return out;
}

}  // namespace

std::string to_string(FanoCondition c) {
  switch (c) {
    case FanoCondition::integral: return "integral";
    case FanoCondition::origin_interior: return "origin_interior";
    case FanoCondition::simplicial: return "simplicial";
    case FanoCondition::unimodular: return "unimodular";
    case FanoCondition::not_extreme: return "not_extreme";
  }
  return "unknown";
}

FanoValidation validate_fano(const std::vector<RatPoint>& points) {
  if (points.empty()) throw InvalidInput("empty vertex list");
  const int l = static_cast<int>(points.front().size());
  if (l < 1 || l > 3) throw InvalidInput("dimension must be 1, 2 or 3");
  for (const auto& p : points)
    if (static_cast<int>(p.size()) != l) throw InvalidInput("vertices of mixed dimension");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (points[i] == points[j]) throw InvalidInput("duplicate vertex");

  RatMatrix diffs;
  for (std::size_t i = 1; i < points.size(); ++i) {
    RatPoint d(l);
    for (int k = 0; k < l; ++k) d[k] = points[i][k] - points[0][k];
    diffs.push_back(std::move(d));
  }
  if (rank(diffs) < l) throw InvalidInput("vertices are not full-dimensional");

  FanoValidation result;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (const auto& q : points[i])
      if (!is_integer(q)) {
        result.violations.push_back({FanoCondition::integral, {static_cast<int>(i)},
                                     "non-integer coordinate"});
        break;
      }

  std::vector<Facet> facets;
  if (l == 1) {
    auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                        [](const RatPoint& a, const RatPoint& b) { return a[0] < b[0]; });
    int ilo = static_cast<int>(lo - points.begin());
    int ihi = static_cast<int>(hi - points.begin());
    facets.push_back({{ilo}, {Rational(-1)}, -(*lo)[0]});
    facets.push_back({{ihi}, {Rational(1)}, (*hi)[0]});
  } else {
    facets = enumerate_facets(points, l);
  }

  std::set<int> on_some_facet;
  for (const auto& f : facets) {
    for (int m : f.members) on_some_facet.insert(m);
    if (f.offset <= 0)
      result.violations.push_back({FanoCondition::origin_interior, f.members,
                                   "origin not strictly inside this facet's half-space"});
    if (static_cast<int>(f.members.size()) != l) {
      result.violations.push_back({FanoCondition::simplicial, f.members,
                                   "facet has " + std::to_string(f.members.size()) + " vertices"});
      continue;
    }
    RatMatrix m;
    for (int v : f.members) m.push_back(points[v]);
    Rational det = determinant(m);
    if (det != 1 && det != -1)
      result.violations.push_back({FanoCondition::unimodular, f.members,
                                   "determinant " + to_string(det)});
  }
  for (int i = 0; i < static_cast<int>(points.size()); ++i)
    if (!on_some_facet.count(i))
      result.violations.push_back({FanoCondition::not_extreme, {i}, "point is not a vertex"});

  if (result.valid()) {
    FanoPolytope p;
    p.dimension = l;
    for (const auto& pt : points) {
      IntPoint ip;
      for (const auto& q : pt) ip.push_back(static_cast<long long>(numerator(q)));
      p.vertices.push_back(std::move(ip));
    }
    for (const auto& f : facets) p.facets.push_back(f.members);
    result.polytope = std::move(p);
  }
  return result;
}

FanoValidation validate_fano(const std::vector<IntPoint>& points) {
  std::vector<RatPoint> rp;
  rp.reserve(points.size());
  for (const auto& p : points) rp.push_back(to_rational(p));
  return validate_fano(rp);
}

FanoPolytope make_fano(const std::vector<IntPoint>& points) {
  auto v = validate_fano(points);
  if (!v.valid()) {
    std::string msg = "not a Fano polytope:";
    for (const auto& viol : v.violations) msg += " " + to_string(viol.condition) + " (" + viol.detail + ")";
    throw InvalidInput(msg);
  }
  return *v.polytope;
}

bool DualPolytope::contains(std::span<const double> z, double tol) const {
  for (const auto& n : normals) {
    double s = 0;
    for (int k = 0; k < dimension; ++k) s += static_cast<double>(n[k]) * z[k];
    if (s > 1.0 + tol) return false;
  }
  return true;
}

bool DualPolytope::contains(const RatPoint& z) const {
  for (const auto& n : normals)
    if (dot(to_rational(n), z) > 1) return false;
  return true;
}

bool DualPolytope::on_boundary(const RatPoint& z) const {
  if (!contains(z)) return false;
  for (const auto& n : normals)
    if (dot(to_rational(n), z) == 1) return true;
  return false;
}

DualPolytope dual_polytope(const FanoPolytope& p) {
  const int l = p.dimension;
  DualPolytope d;
  d.dimension = l;
  d.normals = p.vertices;

  std::vector<RatPoint> raw;
  for (const auto& f : p.facets) {
    RatMatrix a;
    for (int v : f) a.push_back(to_rational(p.vertices[v]));
    raw.push_back(solve(a, RatPoint(l, Rational(1))));
  }
  // Canonical order: ascending in 1D, by angle in 2D, lexicographic in 3D.
  std::vector<int> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  auto angle = [&](int i) { return std::atan2(to_double(raw[i][1]), to_double(raw[i][0])); };
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (l == 2) return angle(a) < angle(b);
    return raw[a] < raw[b];
  });
  std::vector<int> facet_of_dual(raw.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    d.vertices.push_back(raw[order[k]]);
    facet_of_dual[k] = order[k];
  }
  for (const auto& v : d.vertices) d.vertices_d.push_back(to_double(v));

  // Dual facet of P-vertex i: dual vertices whose P-facet contains i.
  for (int i = 0; i < static_cast<int>(p.vertices.size()); ++i) {
    std::vector<int> incident;
    for (int k = 0; k < static_cast<int>(d.vertices.size()); ++k) {
      const auto& f = p.facets[facet_of_dual[k]];
      if (std::find(f.begin(), f.end(), i) != f.end()) incident.push_back(k);
    }
    if (l == 3 && incident.size() > 3) {
      // Order cyclically: consecutive P-facets share an edge through vertex i.
      std::vector<int> cyc{incident.front()};
      std::vector<bool> used(incident.size(), false);
      used[0] = true;
      while (cyc.size() < incident.size()) {
        const auto& cur = p.facets[facet_of_dual[cyc.back()]];
        bool advanced = false;
        for (std::size_t j = 0; j < incident.size() && !advanced; ++j) {
          if (used[j]) continue;
          const auto& nxt = p.facets[facet_of_dual[incident[j]]];
          int shared = 0;
          for (int v : cur)
            if (std::find(nxt.begin(), nxt.end(), v) != nxt.end()) ++shared;
          if (shared == 2) {
            used[j] = true;
            cyc.push_back(incident[j]);
            advanced = true;
          }
        }
        if (!advanced) throw InvalidInput("cannot order dual facet");
      }
      incident = cyc;
    }
    d.facets.push_back(incident);
  }

  for (const auto& f : d.facets) {
    if (l <= 2) {
      d.cones.push_back(f);
    } else {
      for (std::size_t j = 1; j + 1 < f.size(); ++j) d.cones.push_back({f[0], f[j], f[j + 1]});
    }
  }
  Rational volume = 0;
  Rational factorial = l == 1 ? 1 : (l == 2 ? 2 : 6);
  for (const auto& c : d.cones) {
    RatMatrix m;
    for (int v : c) m.push_back(d.vertices[v]);
    Rational det = determinant(m);
    volume += (det < 0 ? Rational(-det) : det) / factorial;
  }
  d.volume = volume;

  IntPoint lo(l), hi(l);
  for (int k = 0; k < l; ++k) {
    Rational mn = d.vertices[0][k], mx = d.vertices[0][k];
    for (const auto& v : d.vertices) {
      mn = std::min(mn, v[k]);
      mx = std::max(mx, v[k]);
    }
    lo[k] = static_cast<long long>(std::floor(to_double(mn)));
    hi[k] = static_cast<long long>(std::ceil(to_double(mx)));
  }
  IntPoint cur = lo;
  while (true) {
    bool inside = true;
    for (const auto& n : d.normals) {
      long long s = 0;
      for (int k = 0; k < l; ++k) s += n[k] * cur[k];
      if (s > 1) {
        inside = false;
        break;
      }
    }
    if (inside) d.lattice_points.push_back(cur);
    int k = 0;
    while (k < l && ++cur[k] > hi[k]) {
      cur[k] = lo[k];
      ++k;
    }
    if (k == l) break;
  }
  std::sort(d.lattice_points.begin(), d.lattice_points.end());
  return d;
}

double support_function(const DualPolytope& dual, std::span<const double> y) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& w : dual.vertices_d) {
    double s = 0;
    for (int k = 0; k < dual.dimension; ++k) s += w[k] * y[k];
    best = std::max(best, s);
  }
  return best;
}

}  // namespace ksm
