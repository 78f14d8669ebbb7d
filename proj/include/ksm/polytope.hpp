#pragma once

#include <ksm/rational.hpp>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ksm {

struct FanoPolytope {
  int dimension = 0;
  std::vector<IntPoint> vertices;
  std::vector<std::vector<int>> facets;  // vertex indices, sorted
};

enum class FanoCondition {
  integral,         // (i) integer vertex coordinates
  origin_interior,  // (ii) origin strictly inside
  simplicial,       // (iii) each facet has exactly l vertices
  unimodular,       // (iv) facet vertices form a lattice basis
  not_extreme,      // an input point is not a vertex of the hull
};

std::string to_string(FanoCondition c);

struct FanoViolation {
  FanoCondition condition;
  std::vector<int> indices;  // offending facet (or single vertex)
  std::string detail;
};

struct FanoValidation {
  std::optional<FanoPolytope> polytope;
  std::vector<FanoViolation> violations;
  bool valid() const { return violations.empty(); }
};

// Throws InvalidInput for empty input, mixed or unsupported dimension,
// duplicate points, or a lower-dimensional point set.
FanoValidation validate_fano(const std::vector<RatPoint>& points);
FanoValidation validate_fano(const std::vector<IntPoint>& points);

// Convenience: validates and throws InvalidInput listing the violations.
FanoPolytope make_fano(const std::vector<IntPoint>& points);

struct DualPolytope {
  int dimension = 0;
  std::vector<RatPoint> vertices;
  std::vector<Point> vertices_d;
  // Half-space description: <normal, z> <= 1, one row per vertex of P.
  std::vector<IntPoint> normals;
  // Facet of P* dual to normals[i]: indices of incident dual vertices
  // (cyclically ordered in dimension 3, sorted otherwise).
  std::vector<std::vector<int>> facets;
  // Triangulation by coning to the origin: each entry lists l dual vertex
  // indices; the simplex is conv(0, those vertices).
  std::vector<std::vector<int>> cones;
  std::vector<IntPoint> lattice_points;
  Rational volume;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  bool contains(std::span<const double> z, double tol = 1e-12) const;
  bool contains(const RatPoint& z) const;
  bool on_boundary(const RatPoint& z) const;
};

DualPolytope dual_polytope(const FanoPolytope& p);

double support_function(const DualPolytope& dual, std::span<const double> y);

// ---------------------------------------------------------------------------
// Quadrature over P* (dimension 1 or 2).

struct QuadratureRule {
  int refinement = 4;        // uniform subdivision count per simplex edge
  bool adaptive = true;      // double refinement until estimates agree
  int max_refinement = 64;
  double tolerance = 0.0;    // 0 selects 1e-12 (l = 1) or 1e-10 (l = 2)
  static constexpr int points_per_axis = 7;
  // Polynomial degree integrated exactly on every simplex.
  static int exact_degree(int dimension) { return dimension == 1 ? 13 : 12; }
};

// Restricts the domain to {z : <normal, z> + offset >= 0}.
struct AffineCut {
  Point normal;
  double offset = 0.0;
};

// Declares that the integrand may fail to be smooth where
// <normal, z> + offset = 0; the mesh is graded geometrically toward that set.
struct Grading {
  Point normal;
  double offset = 0.0;
};

struct IntegrationResult {
  std::vector<double> values;
  double error_estimate = 0.0;
  int refinement = 0;
  bool converged = true;
  double value() const { return values.front(); }
};

// Writes `components` values for the point z into out.
using VectorIntegrand =
    std::function<void(std::span<const double> z, std::span<double> out)>;
using ScalarIntegrand = std::function<double(std::span<const double> z)>;

// Throws UnsupportedDimension for l = 3 and QuadratureError if the integrand
// returns a non-finite value.
IntegrationResult integrate(const DualPolytope& dual, const VectorIntegrand& f,
                            int components, const QuadratureRule& rule = {},
                            std::span<const AffineCut> cuts = {},
                            const std::optional<Grading>& grading = std::nullopt);

IntegrationResult integrate(const DualPolytope& dual, const ScalarIntegrand& f,
                            const QuadratureRule& rule = {},
                            std::span<const AffineCut> cuts = {},
                            const std::optional<Grading>& grading = std::nullopt);

// Quadrature of f over a single interval [a, b] or triangle, with the same
// grading machinery; used by modules that integrate over sub-cells.
double integrate_interval(double a, double b, const ScalarIntegrand& f,
                          int refinement = 1,
                          const std::optional<Grading>& grading = std::nullopt);
double integrate_triangle(std::span<const Point> triangle, const ScalarIntegrand& f,
                          int refinement = 1,
                          const std::optional<Grading>& grading = std::nullopt);
std::vector<double> integrate_interval(double a, double b, const VectorIntegrand& f, int components,
                                       int refinement = 1,
                                       const std::optional<Grading>& grading = std::nullopt);
std::vector<double> integrate_triangle(std::span<const Point> triangle, const VectorIntegrand& f,
                                       int components, int refinement = 1,
                                       const std::optional<Grading>& grading = std::nullopt);

}  // namespace ksm
