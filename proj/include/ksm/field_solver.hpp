#pragma once

#include <ksm/functionals.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ksm {

struct SolveReport {
  std::optional<Point> c;
  double residual = 0;  // ||F(c)|| / volume_g, i.e. ||b_g||
  int iterations = 0;
  std::string method;
  bool converged = false;
  bool boundary_obstruction = false;
  double margin_alpha = 0;  // k_min - alpha
  double margin_beta = 0;   // beta - k_max
  std::optional<Point> last_iterate;
  std::string diagnostics;
};

// Kahler-Ricci soliton field: minimizer of c -> integral of h e^{-<c, z>}.
SolveReport solve_soliton(const KSMModel& model, int max_iterations = 200);

// Which coefficient of k(z) = b1 z + b2 parameterizes a 1D path; the other
// follows from b2 = -b1 b_h.
enum class PathParameter { slope, constant };
std::string to_string(PathParameter p);

struct PathReport {
  SolveReport report;
  PathParameter parameter = PathParameter::slope;
  double tau = 0;
  // Open admissible interval of the parameter (exact endpoints).
  Rational lower;
  Rational upper;
  double value_at_lower = 0;  // I_tau at the endpoints
  double value_at_upper = 0;
  std::optional<double> root;
  double value_at_root = 0;
  bool has_root = false;
};

// Requires dimension 1 and tau in [0, 1]; sigma = tau_mix(tau).
PathReport solve_path_1d(const KSMModel& model, double tau,
                         PathParameter parameter = PathParameter::slope);

// I_tau(p): the reduced Futaki invariant along the path.
double path_value(const KSMModel& model, double tau, PathParameter parameter, double p);
// The same at an exact parameter value (used at interval endpoints).
double path_value(const KSMModel& model, double tau, PathParameter parameter, const Rational& p);

// Field with k(z) = b1 z + b2 for the given parameter value, built exactly.
FiberField path_field(const KSMModel& model, PathParameter parameter, const Rational& p);

struct Tau0Report {
  bool found = false;
  double tau0 = 0;
  double value = 0;  // I_{tau0} at the boundary field
  Rational b1;       // boundary slope coefficient
  FiberField field;
  std::vector<double> sign_changes;  // left ends of all tau-grid cells with a sign change
  std::vector<std::pair<std::string, bool>> endpoint_scan;  // per endpoint: root found
  std::string diagnostics;
};

// Scans tau on a 1e-3 grid at each admissible-interval endpoint (left first,
// in b1) and certifies the first sign change by bisection.
Tau0Report find_tau0(const KSMModel& model);

// Damped Newton on F(c) with an analytic Jacobian; iterates stay strictly
// admissible. Reports a boundary obstruction when the iterate is driven onto
// the admissible boundary without reaching F = 0.
SolveReport solve_general(const KSMModel& model, const SigmaProfile& profile, const Point& c0,
                          double tol = 1e-10, int max_iterations = 200);

}  // namespace ksm
