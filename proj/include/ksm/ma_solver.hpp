#pragma once

#include <ksm/ding.hpp>
#include <ksm/errors.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ksm {

// Refusal to solve for an unstable configuration; carries the verdict.
struct UnstableInput : Error {
  UnstableInput(const std::string& what, Verdict v) : Error(what), verdict(std::move(v)) {}
  Verdict verdict;
};

struct MAOptions {
  double tolerance = 0;  // total-variation residual; 0 selects 1e-4 (uniform) or 1e-3 (non-uniform)
  int max_iterations = 200;
};

struct MASolution {
  ConvexDualGrid u;          // normalized: integral of e^{-u} equals |P*|_g
  double ding_value = 0;     // shift invariant
  double ding_initial = 0;
  double residual = 0;       // (1/2) sum |q_i - p_i|, cell-mass mismatch in total variation
  double residual_sup = 0;   // max |q_i - p_i|
  double coverage = 0;       // g-mass fraction of dual faces met by primal corners in the window
  double shift = 0;          // s = log(integral e^{-u} / |P*|_g) before normalization
  double normalized_mass = 0;  // integral of e^{-u} after normalization
  Point pushforward_barycenter;  // sum p_i z_i
  int iterations = 0;
  bool converged = false;
  bool non_uniform = false;
  int zero_set_dimension = -1;  // dimension of {k = alpha} in P*; -1 when empty
  std::string regularity_note;
  double holder_exponent = 0;  // empirical, from oscillation against scale
  std::vector<double> history;  // D after each accepted step (first entry: initial)
};

// Initial grid: the Legendre dual of the reference potential u_P.
ConvexDualGrid reference_dual_grid(const KSMModel& model, DualMeshPtr mesh);

// Damped Newton on the discrete Ding functional with convex projection after
// every step. Throws UnstableInput if the verdict is unstable.
MASolution minimize_ding(const DingContext& ctx, std::optional<ConvexDualGrid> init = std::nullopt,
                         const MAOptions& options = {});

struct AlexandrovMeasure {
  std::vector<Point> points;    // primal corners
  std::vector<double> masses;   // (1/|P*|_g) integral of g over the subdifferential
  double total = 0;
};

// Throws InvalidInput on grids that are not convex.
AlexandrovMeasure alexandrov_measure(const ConvexDualGrid& u, const DingContext& ctx);

// Sup over interior nodes with |z| <= interior of |w'' - g e^{z w' - w}|,
// by centered differences; requires l = 1 and a normalized grid.
double ode_residual_1d(const ConvexDualGrid& u, const DingContext& ctx, double interior = 0.75);

struct SubsolutionCheck {
  double C = 0;           // smallest constant with C g det D^2 u >= e^{-u} on the sample grid
  double A = 0;           // min of e^{-sigma(k)}
  double a0 = 0;          // growth constant (0 when alpha is infinite)
  int samples = 0;
  double window = 0;
  bool holds = false;     // C finite and positive at every sample
  bool strictly_convex = false;
  std::vector<double> log_weights;  // per lattice point of P* (all zero)
  std::string detail;
};

struct Subsolution {
  ConvexDualGrid u;  // dual grid of the subsolution
  SubsolutionCheck check;
};

// 2 log sum_{a in P* lattice} e^{<a, y>/2}, checked against the lower bound
// h A0 (k - alpha) for g (h A when alpha is infinite). The half scale keeps C
// bounded as the window grows. Refuses when the growth bound fails.
Subsolution build_subsolution(const DingContext& ctx, double window = 10, int samples_per_axis = 0);

// Rows (y, u(y), u'(y)) on [-Y, Y] (l = 1) or (y1, y2, u) on a square grid.
std::string primal_csv(const ConvexDualGrid& u, double Y, int samples);
// Rows (z, u*(z)) per node.
std::string dual_csv(const ConvexDualGrid& u);

}  // namespace ksm
