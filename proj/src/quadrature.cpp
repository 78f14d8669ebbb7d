#include <ksm/errors.hpp>
#include <ksm/polytope.hpp>

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace ksm {

namespace {

constexpr int kGaussPoints = QuadratureRule::points_per_axis;
constexpr int kMaxGradingLevels = 60;

struct UnitRule {
  std::array<double, kGaussPoints> x{};
  std::array<double, kGaussPoints> w{};
};

// Gauss-Legendre nodes and weights mapped to [0, 1].
const UnitRule& unit_rule() {
  static const UnitRule rule = [] {
    using G = boost::math::quadrature::gauss<double, kGaussPoints>;
    const auto& abs = G::abscissa();
    const auto& wts = G::weights();
    std::vector<std::pair<double, double>> nodes;
    for (std::size_t i = 0; i < abs.size(); ++i) {
      nodes.emplace_back(abs[i], wts[i]);
      if (abs[i] != 0.0) nodes.emplace_back(-abs[i], wts[i]);
    }
    std::sort(nodes.begin(), nodes.end());
    UnitRule r;
    for (int i = 0; i < kGaussPoints; ++i) {
      r.x[i] = 0.5 * (nodes[i].first + 1.0);
      r.w[i] = 0.5 * nodes[i].second;
    }
    return r;
  }();
  return rule;
}

using Vec2 = std::array<double, 2>;
using Polygon = std::vector<Vec2>;

double affine(const Point& normal, double offset, double x) { return normal[0] * x + offset; }
double affine(const Point& normal, double offset, const Vec2& x) {
  return normal[0] * x[0] + normal[1] * x[1] + offset;
}

Polygon clip(const Polygon& poly, const Point& normal, double offset) {
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    double sp = affine(normal, offset, p);
    double sq = affine(normal, offset, q);
    if (sp >= 0) out.push_back(p);
    if ((sp >= 0) != (sq >= 0)) {
      double t = sp / (sp - sq);
      out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
    }
  }
  return out;
}

double polygon_area(const Polygon& poly) {
  double a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(a);
}

// Geometric levels lmax/2, lmax/4, ... strictly above max(lmin, 0).
std::vector<double> grading_levels(double lmin, double lmax) {
  std::vector<double> levels;
  if (lmax <= 0) return levels;
  const double floor_level = std::max(lmin, 0.0);
  double level = 0.5 * lmax;
  for (int j = 0; j < kMaxGradingLevels && level > floor_level; ++j, level *= 0.5)
    levels.push_back(level);
  return levels;
}

std::vector<std::pair<double, double>> graded_intervals(double a, double b,
                                                        const std::optional<Grading>& g) {
  if (!g || g->normal[0] == 0.0) return {{a, b}};
  double la = affine(g->normal, g->offset, a);
  double lb = affine(g->normal, g->offset, b);
  auto levels = grading_levels(std::min(la, lb), std::max(la, lb));
  std::vector<double> cuts{a, b};
  for (double lev : levels) cuts.push_back((lev - g->offset) / g->normal[0]);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) out.emplace_back(cuts[i], cuts[i + 1]);
  return out;
}

std::vector<Polygon> graded_polygons(const Polygon& poly, const std::optional<Grading>& g) {
  if (!g) return {poly};
  double lmin = std::numeric_limits<double>::infinity();
  double lmax = -lmin;
  for (const auto& v : poly) {
    double s = affine(g->normal, g->offset, v);
    lmin = std::min(lmin, s);
    lmax = std::max(lmax, s);
  }
  auto levels = grading_levels(lmin, lmax);
  if (levels.empty()) return {poly};
  std::vector<Polygon> out;
  Polygon rest = poly;
  Point neg{-g->normal[0], -g->normal[1]};
  for (double lev : levels) {
    Polygon piece = clip(rest, g->normal, g->offset - lev);
    rest = clip(rest, neg, lev - g->offset);
    if (piece.size() >= 3) out.push_back(std::move(piece));
    if (rest.size() < 3) break;
  }
  if (rest.size() >= 3) out.push_back(std::move(rest));
  return out;
}

class Accumulator {
 public:
  Accumulator(const VectorIntegrand& f, int components)
      : f_(f), sum_(components, 0.0), buf_(components, 0.0) {}

  void add(std::span<const double> z, double weight) {
    std::fill(buf_.begin(), buf_.end(), 0.0);
    f_(z, buf_);
    for (std::size_t k = 0; k < buf_.size(); ++k) {
      if (!std::isfinite(buf_[k])) throw QuadratureError("integrand is not finite at a quadrature node");
      sum_[k] += weight * buf_[k];
    }
  }
  const std::vector<double>& sum() const { return sum_; }

 private:
  const VectorIntegrand& f_;
  std::vector<double> sum_;
  std::vector<double> buf_;
};

void interval_rule(double a, double b, int r, Accumulator& acc) {
  const auto& u = unit_rule();
  const double h = (b - a) / r;
  double z[1];
  for (int piece = 0; piece < r; ++piece) {
    const double lo = a + piece * h;
    for (int i = 0; i < kGaussPoints; ++i) {
      z[0] = lo + u.x[i] * h;
      acc.add(z, u.w[i] * h);
    }
  }
}

void triangle_duffy(const Vec2& a, const Vec2& b, const Vec2& c, Accumulator& acc) {
  const auto& u = unit_rule();
  const double area2 = std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
  if (area2 == 0.0) return;
  double z[2];
  for (int i = 0; i < kGaussPoints; ++i) {
    const double xi = u.x[i];
    for (int j = 0; j < kGaussPoints; ++j) {
      const double eta = u.x[j];
      z[0] = a[0] + xi * (b[0] - a[0]) + xi * eta * (c[0] - b[0]);
      z[1] = a[1] + xi * (b[1] - a[1]) + xi * eta * (c[1] - b[1]);
      acc.add(z, u.w[i] * u.w[j] * xi * area2);
    }
  }
}

void triangle_rule(const Vec2& a, const Vec2& b, const Vec2& c, int r, Accumulator& acc) {
  auto at = [&](int i, int j) {
    const double s = static_cast<double>(i) / r;
    const double t = static_cast<double>(j) / r;
    return Vec2{a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
                a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])};
  };
  for (int i = 0; i < r; ++i)
    for (int j = 0; i + j < r; ++j) {
      triangle_duffy(at(i, j), at(i + 1, j), at(i, j + 1), acc);
      if (i + j + 2 <= r) triangle_duffy(at(i + 1, j), at(i + 1, j + 1), at(i, j + 1), acc);
    }
}

void polygon_rule(const Polygon& poly, int r, Accumulator& acc) {
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) triangle_rule(poly[0], poly[i], poly[i + 1], r, acc);
}

std::vector<double> evaluate_1d(const DualPolytope& dual, const VectorIntegrand& f, int components,
                                int r, std::span<const AffineCut> cuts,
                                const std::optional<Grading>& grading) {
  Accumulator acc(f, components);
  for (const auto& cone : dual.cones) {
    const double w = dual.vertices_d[cone[0]][0];
    double a = std::min(0.0, w), b = std::max(0.0, w);
    for (const auto& cut : cuts) {
      const double n = cut.normal[0];
      if (n > 0) a = std::max(a, -cut.offset / n);
      else if (n < 0) b = std::min(b, -cut.offset / n);
      else if (cut.offset < 0) b = a;
    }
    if (b <= a) continue;
    for (const auto& [lo, hi] : graded_intervals(a, b, grading)) interval_rule(lo, hi, r, acc);
  }
  return acc.sum();
}

std::vector<double> evaluate_2d(const DualPolytope& dual, const VectorIntegrand& f, int components,
                                int r, std::span<const AffineCut> cuts,
                                const std::optional<Grading>& grading) {
  Accumulator acc(f, components);
  for (const auto& cone : dual.cones) {
    const auto& p = dual.vertices_d[cone[0]];
    const auto& q = dual.vertices_d[cone[1]];
    Polygon poly{{0.0, 0.0}, {p[0], p[1]}, {q[0], q[1]}};
    for (const auto& cut : cuts) {
      poly = clip(poly, cut.normal, cut.offset);
      if (poly.size() < 3) break;
    }
    if (poly.size() < 3 || polygon_area(poly) == 0.0) continue;
    for (const auto& piece : graded_polygons(poly, grading)) polygon_rule(piece, r, acc);
  }
  return acc.sum();
}

}  // namespace

IntegrationResult integrate(const DualPolytope& dual, const VectorIntegrand& f, int components,
                            const QuadratureRule& rule, std::span<const AffineCut> cuts,
                            const std::optional<Grading>& grading) {
  const int l = dual.dimension;
  if (l != 1 && l != 2) throw UnsupportedDimension("quadrature supports dimensions 1 and 2 only");
  auto eval = [&](int r) {
    return l == 1 ? evaluate_1d(dual, f, components, r, cuts, grading)
                  : evaluate_2d(dual, f, components, r, cuts, grading);
  };
  const double tol = rule.tolerance > 0 ? rule.tolerance : (l == 1 ? 1e-12 : 1e-10);
  int r = std::max(1, rule.refinement);
  IntegrationResult res;
  res.values = eval(r);
  res.refinement = r;
  if (!rule.adaptive) {
    res.error_estimate = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  while (true) {
    const int r2 = 2 * r;
    auto next = eval(r2);
    double diff = 0, scale = 1;
    for (std::size_t k = 0; k < next.size(); ++k) {
      diff = std::max(diff, std::abs(next[k] - res.values[k]));
      scale = std::max(scale, std::abs(next[k]));
    }
    res.values = std::move(next);
    res.refinement = r2;
    res.error_estimate = diff;
    if (diff <= tol * scale) return res;
    if (r2 >= rule.max_refinement) {
      res.converged = false;
      return res;
    }
    r = r2;
  }
}

IntegrationResult integrate(const DualPolytope& dual, const ScalarIntegrand& f,
                            const QuadratureRule& rule, std::span<const AffineCut> cuts,
                            const std::optional<Grading>& grading) {
  VectorIntegrand vf = [&f](std::span<const double> z, std::span<double> out) { out[0] = f(z); };
  return integrate(dual, vf, 1, rule, cuts, grading);
}

std::vector<double> integrate_interval(double a, double b, const VectorIntegrand& f, int components,
                                       int refinement, const std::optional<Grading>& grading) {
  Accumulator acc(f, components);
  for (const auto& [lo, hi] : graded_intervals(a, b, grading)) interval_rule(lo, hi, refinement, acc);
  return acc.sum();
}

std::vector<double> integrate_triangle(std::span<const Point> triangle, const VectorIntegrand& f,
                                       int components, int refinement,
                                       const std::optional<Grading>& grading) {
  Accumulator acc(f, components);
  Polygon poly;
  for (const auto& p : triangle) poly.push_back({p[0], p[1]});
  for (const auto& piece : graded_polygons(poly, grading)) polygon_rule(piece, refinement, acc);
  return acc.sum();
}

double integrate_interval(double a, double b, const ScalarIntegrand& f, int refinement,
                          const std::optional<Grading>& grading) {
  VectorIntegrand vf = [&f](std::span<const double> z, std::span<double> out) { out[0] = f(z); };
  return integrate_interval(a, b, vf, 1, refinement, grading)[0];
}

double integrate_triangle(std::span<const Point> triangle, const ScalarIntegrand& f, int refinement,
                          const std::optional<Grading>& grading) {
  VectorIntegrand vf = [&f](std::span<const double> z, std::span<double> out) { out[0] = f(z); };
  return integrate_triangle(triangle, vf, 1, refinement, grading)[0];
}

}  // namespace ksm
