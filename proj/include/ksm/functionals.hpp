#pragma once

#include <ksm/ksm_model.hpp>
#include <ksm/sigma.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ksm {

// Fiber-directed field with affine potential k(z) = -<c, z> + C_V, where
// C_V = <c, b_h> makes the h-weighted integral of k vanish.
struct FiberField {
  Point c;
  double C_V = 0;
  double k_min = 0;
  double k_max = 0;
  // Present when the field was built from exact data.
  std::optional<RatPoint> c_exact;
  std::optional<Rational> C_V_exact;
  std::optional<std::vector<Rational>> k_vertices_exact;  // k at each dual vertex

  double k(std::span<const double> z) const;
};

FiberField normalize_field(const Point& c, const HStats& stats, const DualPolytope& dual);
FiberField normalize_field_exact(const RatPoint& c, const ExactHMoments& moments,
                                 const DualPolytope& dual);

// Distance scale used when comparing k_min with alpha.
double boundary_tolerance(const SigmaProfile& profile, const FiberField& field);

// True when k(P*) lies in (alpha, beta), or touches alpha in non-uniform mode.
bool field_admissible(const SigmaProfile& profile, const FiberField& field, bool allow_touch);

// Grading hint for integrands carrying e^{-sigma(k)}: the face where k = alpha.
std::optional<Grading> sigma_grading(const SigmaProfile& profile, const FiberField& field);

// h(z) e^{-sigma(k(z))}. Values of k within the boundary tolerance below alpha
// are treated as alpha. Throws DomainError if z is outside P* or k(z) leaves
// [alpha, beta).
double g_weight(const KSMModel& model, const SigmaProfile& profile, const FiberField& field,
                std::span<const double> z);
// Same without the containment check on z.
double g_value(const KSMModel& model, const SigmaProfile& profile, const FiberField& field,
               std::span<const double> z);

struct GStats {
  double volume = 0;
  Point barycenter;
  Point futaki;  // components of the integral of z g over P*
  double A = 0;  // min of e^{-sigma(k)} over P*
  double B = 0;  // max of e^{-sigma(k)} over P*
  bool touches_alpha = false;
  double error_estimate = 0;
  double barycenter_norm() const;
};

GStats g_stats(const KSMModel& model, const SigmaProfile& profile, const FiberField& field,
               const QuadratureRule& rule = {});

// Convex piecewise-linear function max_r (<a_r, z> + b_r) with offset R.
struct PLConvex {
  std::vector<std::pair<Point, double>> pieces;
  double R = 0;
  double operator()(std::span<const double> z) const;
  // True when a single piece dominates on all of P*.
  bool affine_on(const DualPolytope& dual) const;
};

enum class Stability { polystable_uniform, polystable_non_uniform, unstable };
std::string to_string(Stability s);

struct Verdict {
  Stability kind = Stability::unstable;
  double barycenter_norm = 0;
  double tolerance = 0;
  std::optional<PLConvex> destabilizer;
  double destabilizer_invariant = 0;
};

Verdict stability_verdict(const GStats& stats, const SigmaProfile& profile, const FiberField& field,
                          double tol = 1e-8);

// (1/|P*|_g) integral of phi g minus phi(0), integrated exactly piece by piece.
double ding_invariant(const PLConvex& phi, const KSMModel& model, const SigmaProfile& profile,
                      const FiberField& field, const GStats& stats);

}  // namespace ksm
