#pragma once

#include <ksm/polytope.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ksm {

// Fibration data: n curvature vectors in Q^l over a Fano polytope of dimension l.
struct KSMData {
  int n = 0;
  int l = 1;
  std::vector<RatPoint> mu;
  FanoPolytope polytope;
  std::string label;
};

struct KSMValidation {
  std::vector<std::string> violations;
  // min over alpha and dual vertices w of 1 + <mu_alpha, w>; empty when n = 0.
  std::optional<Rational> margin;
  bool valid() const { return violations.empty(); }
};

KSMValidation validate_ksm(const KSMData& data);

// Validated data together with its dual polytope.
struct KSMModel {
  KSMData data;
  DualPolytope dual;
  std::vector<Point> mu;  // floating copies of the curvature vectors
  int dimension() const { return data.l; }
};

// Throws InvalidInput if validation fails.
KSMModel make_model(KSMData data);

// prod_alpha (1 + <mu_alpha, z>) without a containment check.
double h_value(const KSMModel& model, std::span<const double> z);

// Same value; throws DomainError when z lies outside P*.
double h_weight(const KSMModel& model, std::span<const double> z);

struct HStats {
  double volume = 0;
  Point barycenter;
  Point ke_defect;  // components of the integral of z h over P*
  double error_estimate = 0;
  // The classical Kahler-Einstein criterion: defect negligible against volume.
  bool ke_criterion(double rel_tol = 1e-9) const;
};

HStats h_stats(const KSMModel& model, const QuadratureRule& rule = {});

// Exact rational moments of h, available for l = 1.
struct ExactHMoments {
  Rational volume;
  RatPoint moments;
  RatPoint barycenter;
};
std::optional<ExactHMoments> exact_h_moments(const KSMModel& model);

// Smooth convex reference potential log sum_{a in P* lattice} e^{<a, y>}.
double reference_potential_uP(const KSMModel& model, std::span<const double> y);

// log sum_i exp(log_weight_i + <point_i, y>) with gradient and Hessian
// (row-major l x l). Entries with log_weight = -inf are skipped.
struct LogSumExp {
  double value = 0;
  Point gradient;
  std::vector<double> hessian;
};
LogSumExp log_sum_exp(std::span<const Point> points, std::span<const double> log_weights,
                      std::span<const double> y);

}  // namespace ksm
