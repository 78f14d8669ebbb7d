#pragma once

#include <ksm/dual_grid.hpp>
#include <ksm/functionals.hpp>

#include <string>
#include <vector>

namespace ksm {

// Everything needed to evaluate functionals on grids over a fixed mesh:
// model, profile, field, their statistics and the nodal weights of h and g.
struct DingContext {
  KSMModel model;
  SigmaProfile profile;
  FiberField field;
  HStats hstats;
  GStats gstats;
  DualMeshPtr mesh;
  std::vector<double> g_nodal;  // hat weights of g / volume_g (sum 1)
  std::vector<double> h_nodal;  // hat weights of h / volume_h (sum 1)
};

DingContext make_ding_context(const KSMModel& model, const SigmaProfile& profile,
                              const FiberField& field, DualMeshPtr mesh);

// Default levels: 9 in dimension 1, 6 in dimension 2.
int default_mesh_level(int dimension);

struct DingValue {
  double value = 0;
  double linear = 0;     // (1/|P*|_g) integral of u* g
  double log_mass = 0;   // log of the integral of e^{-u}
  double tail_bound = 0; // relative, see LegendreCells
};

DingValue ding_functional(const ConvexDualGrid& u, const DingContext& ctx);

double j_red(const ConvexDualGrid& u, const DingContext& ctx);
double j_sigma(const ConvexDualGrid& u, const DingContext& ctx);

// Dual values u0* + t (phi - R).
ConvexDualGrid geodesic_point(const ConvexDualGrid& u0, const PLConvex& phi, double t);

// Dual of an affine shift: u* + <a, z> + b.
ConvexDualGrid add_affine(const ConvexDualGrid& u, const Point& a, double b);

// Integral of e^{-v_{P*}} over R^l (equals the number of vertices of P*).
double support_exp_integral(const DualPolytope& dual);

struct CoercivitySample {
  double j_red = 0;
  double j_sigma = 0;
  double ding = 0;
};

struct CoercivityEstimate {
  double delta = 0;  // largest slope with D >= delta J - C on the samples
  double C = 0;
  bool evidence = false;  // delta > 0
};

struct CoercivityProbe {
  CoercivityEstimate against_j_red;
  CoercivityEstimate against_j_sigma;
  std::vector<CoercivitySample> table;
  std::string note;
};

// Fits D >= delta J - C over the samples, anchored at the sample with the
// smallest D: delta is the smallest slope from it to samples with larger J
// (the lower hull of the points (J, D) seen from the minimizer), and C makes
// the bound tight there.
CoercivityEstimate fit_coercivity(const std::vector<std::pair<double, double>>& j_and_d);

CoercivityProbe coercivity_probe(const DingContext& ctx, const std::vector<ConvexDualGrid>& samples);

}  // namespace ksm
