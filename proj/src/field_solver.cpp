#include <ksm/errors.hpp>
#include <ksm/field_solver.hpp>

#include <boost/math/tools/toms748_solve.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ksm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(const Point& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void set_margins(SolveReport& r, const SigmaProfile& profile, const FiberField& field) {
  r.margin_alpha = std::isfinite(profile.alpha()) ? field.k_min - profile.alpha() : kInf;
  r.margin_beta = std::isfinite(profile.beta()) ? profile.beta() - field.k_max : kInf;
}

// Root of f on [a, b] given endpoint values of opposite sign.
template <class F>
double bracket_root(F f, double a, double b, double fa, double fb, int& iterations) {
  boost::uintmax_t max_iter = 200;
  auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                                    boost::math::tools::eps_tolerance<double>(52), max_iter);
  iterations = static_cast<int>(max_iter);
  const double flo = f(lo), fhi = f(hi);
  return std::abs(flo) <= std::abs(fhi) ? lo : hi;
}

const ExactHMoments& require_exact(const std::optional<ExactHMoments>& m) {
  if (!m) throw UnsupportedDimension("exact path computations require dimension 1");
  return *m;
}

}  // namespace

SolveReport solve_soliton(const KSMModel& model, int max_iterations) {
  const int l = model.dimension();
  SolveReport rep;
  rep.method = "soliton-newton";
  QuadratureRule rule;
  rule.tolerance = 1e-14;
  // Phi, grad Phi, Hess Phi of c -> integral of h e^{-<c, z>}.
  auto eval = [&](const Point& c) {
    VectorIntegrand f = [&](std::span<const double> z, std::span<double> out) {
      double cz = 0;
      for (int k = 0; k < l; ++k) cz += c[k] * z[k];
      const double w = h_value(model, z) * std::exp(-cz);
      out[0] = w;
      for (int a = 0; a < l; ++a) {
        out[1 + a] = -z[a] * w;
        for (int b = 0; b < l; ++b) out[1 + l + a * l + b] = z[a] * z[b] * w;
      }
    };
    return integrate(model.dual, f, 1 + l + l * l, rule).values;
  };
  Point c(l, 0.0);
  auto v = eval(c);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd g(l);
    Eigen::MatrixXd H(l, l);
    for (int a = 0; a < l; ++a) {
      g[a] = v[1 + a];
      for (int b = 0; b < l; ++b) H(a, b) = v[1 + l + a * l + b];
    }
    rep.iterations = it;
    if (g.norm() / v[0] <= 1e-12) {
      rep.converged = true;
      break;
    }
    const Eigen::VectorXd step = -H.ldlt().solve(g);
    double t = 1;
    Point trial(l);
    std::vector<double> tv;
    for (; t > 1e-12; t *= 0.5) {
      for (int a = 0; a < l; ++a) trial[a] = c[a] + t * step[a];
      tv = eval(trial);
      if (tv[0] <= v[0] + 1e-4 * t * g.dot(step)) break;
    }
    if (t <= 1e-12) {
      rep.diagnostics = "line search stalled";
      break;
    }
    c = trial;
    v = std::move(tv);
  }
  const auto hs = h_stats(model);
  const auto field = normalize_field(c, hs, model.dual);
  const auto sigma = SigmaProfile::linear(0.0);
  const auto gs = g_stats(model, sigma, field);
  rep.residual = gs.barycenter_norm();
  rep.c = c;
  rep.last_iterate = c;
  set_margins(rep, sigma, field);
  if (!rep.converged && rep.diagnostics.empty()) rep.diagnostics = "iteration cap reached";
  return rep;
}

std::string to_string(PathParameter p) { return p == PathParameter::slope ? "b1" : "b2"; }

namespace {

// Coefficient s_w with k(w) = s_w * p along the path.
Rational path_slope_at(const Rational& w, const Rational& bh, PathParameter parameter) {
  if (parameter == PathParameter::slope) return w - bh;
  if (bh == 0) throw DomainError("the constant-term parameterization needs b_h != 0");
  return -(w - bh) / bh;
}

Rational slope_from_parameter(const Rational& p, const Rational& bh, PathParameter parameter) {
  if (parameter == PathParameter::slope) return p;
  if (bh == 0) throw DomainError("the constant-term parameterization needs b_h != 0");
  return -p / bh;
}

FiberField field_from_slope(const KSMModel& model, const ExactHMoments& m, double b1) {
  HStats hs;
  hs.volume = to_double(m.volume);
  hs.barycenter = to_double(m.barycenter);
  return normalize_field({-b1}, hs, model.dual);
}

}  // namespace

FiberField path_field(const KSMModel& model, PathParameter parameter, const Rational& p) {
  const auto moments = exact_h_moments(model);
  const auto& m = require_exact(moments);
  const Rational b1 = slope_from_parameter(p, m.barycenter[0], parameter);
  return normalize_field_exact({-b1}, m, model.dual);
}

double path_value(const KSMModel& model, double tau, PathParameter parameter, const Rational& p) {
  return g_stats(model, SigmaProfile::tau_mix(tau), path_field(model, parameter, p)).futaki[0];
}

double path_value(const KSMModel& model, double tau, PathParameter parameter, double p) {
  const auto moments = exact_h_moments(model);
  const auto& m = require_exact(moments);
  const double bh = to_double(m.barycenter[0]);
  const double b1 = parameter == PathParameter::slope ? p : -p / bh;
  return g_stats(model, SigmaProfile::tau_mix(tau), field_from_slope(model, m, b1)).futaki[0];
}

PathReport solve_path_1d(const KSMModel& model, double tau, PathParameter parameter) {
  if (model.dimension() != 1) throw UnsupportedDimension("path solves require dimension 1");
  if (!(tau >= 0 && tau <= 1)) throw DomainError("tau must lie in [0, 1]");
  const auto moments = exact_h_moments(model);
  const auto& m = require_exact(moments);
  const Rational bh = m.barycenter[0];
  const Rational alpha = -1;  // tau_mix domain (-1, inf)
  PathReport out;
  out.parameter = parameter;
  out.tau = tau;
  out.report.method = "path-bisection(" + to_string(parameter) + ")";
  std::optional<Rational> lo, hi;
  for (const auto& w : model.dual.vertices) {
    const Rational s = path_slope_at(w[0], bh, parameter);
    if (s == 0) continue;
    const Rational bound = alpha / s;
    if (s > 0) lo = lo ? std::max(*lo, bound) : bound;
    else hi = hi ? std::min(*hi, bound) : bound;
  }
  if (!lo || !hi) throw DomainError("admissible parameter interval is unbounded");
  out.lower = *lo;
  out.upper = *hi;
  out.value_at_lower = path_value(model, tau, parameter, *lo);
  out.value_at_upper = path_value(model, tau, parameter, *hi);
  if ((out.value_at_lower > 0) == (out.value_at_upper > 0) || out.value_at_lower == 0 ||
      out.value_at_upper == 0) {
    out.report.diagnostics = "no interior root: I has the same sign at both endpoints";
    return out;
  }
  auto f = [&](double p) { return path_value(model, tau, parameter, p); };
  int iterations = 0;
  const double root = bracket_root(f, to_double(*lo), to_double(*hi), out.value_at_lower,
                                   out.value_at_upper, iterations);
  out.root = root;
  out.value_at_root = f(root);
  out.has_root = true;
  const double b1 = parameter == PathParameter::slope ? root : -root / to_double(bh);
  const auto field = field_from_slope(model, m, b1);
  const auto sigma = SigmaProfile::tau_mix(tau);
  const auto gs = g_stats(model, sigma, field);
  out.report.c = Point{-b1};
  out.report.last_iterate = out.report.c;
  out.report.iterations = iterations;
  out.report.residual = gs.barycenter_norm();
  out.report.converged = std::abs(out.value_at_root) <= 1e-11;
  set_margins(out.report, sigma, field);
  if (!out.report.converged) out.report.diagnostics = "bracket collapsed above the 1e-11 target";
  return out;
}

Tau0Report find_tau0(const KSMModel& model) {
  if (model.dimension() != 1) throw UnsupportedDimension("tau0 search requires dimension 1");
  const auto moments = exact_h_moments(model);
  const auto& m = require_exact(moments);
  const Rational bh = m.barycenter[0];
  std::vector<Rational> ends;
  {
    std::optional<Rational> lo, hi;
    for (const auto& w : model.dual.vertices) {
      const Rational s = w[0] - bh;
      if (s == 0) continue;
      const Rational bound = Rational(-1) / s;
      if (s > 0) lo = lo ? std::max(*lo, bound) : bound;
      else hi = hi ? std::min(*hi, bound) : bound;
    }
    if (lo) ends.push_back(*lo);
    if (hi) ends.push_back(*hi);
  }
  Tau0Report rep;
  const int grid = 1000;
  for (const auto& b1 : ends) {
    const auto field = normalize_field_exact({-b1}, m, model.dual);
    auto I = [&](double tau) { return g_stats(model, SigmaProfile::tau_mix(tau), field).futaki[0]; };
    std::vector<double> values(grid + 1);
    for (int i = 0; i <= grid; ++i) values[i] = I(static_cast<double>(i) / grid);
    std::vector<int> changes;
    for (int i = 0; i < grid; ++i)
      if ((values[i] > 0) != (values[i + 1] > 0) || values[i] == 0) changes.push_back(i);
    rep.endpoint_scan.emplace_back("b1 = " + to_string(b1), !changes.empty());
    if (changes.empty() || rep.found) continue;
    for (int i : changes) rep.sign_changes.push_back(static_cast<double>(i) / grid);
    const int i = changes.front();
    const double a = static_cast<double>(i) / grid, b = static_cast<double>(i + 1) / grid;
    int iterations = 0;
    const double tau0 = values[i] == 0 ? a : bracket_root(I, a, b, values[i], values[i + 1], iterations);
    rep.found = true;
    rep.tau0 = tau0;
    rep.value = I(tau0);
    rep.b1 = b1;
    rep.field = field;
    if (std::abs(rep.value) > 1e-11) rep.diagnostics = "root bracketed but |I| above 1e-11";
  }
  if (!rep.found) rep.diagnostics = "no boundary root";
  return rep;
}

SolveReport solve_general(const KSMModel& model, const SigmaProfile& profile, const Point& c0,
                          double tol, int max_iterations) {
  const int l = model.dimension();
  if (static_cast<int>(c0.size()) != l) throw InvalidInput("initial field has the wrong dimension");
  const auto hs = h_stats(model);
  SolveReport rep;
  rep.method = "damped-newton";
  auto field_of = [&](const Point& c) { return normalize_field(c, hs, model.dual); };
  if (!field_admissible(profile, field_of(c0), false))
    throw DomainError("initial field is not strictly admissible");
  const double scale = std::isfinite(profile.alpha()) && std::isfinite(profile.beta())
                           ? profile.beta() - profile.alpha()
                           : 1.0;
  const double safeguard = 1e-12 * scale;
  // F components, volume, and optionally the Jacobian dF/dc.
  struct Eval {
    Point F;
    double volume = 0;
    Eigen::MatrixXd J;
  };
  auto eval = [&](const Point& c, bool jacobian) {
    const auto field = field_of(c);
    const int comps = 1 + l + (jacobian ? l * l : 0);
    VectorIntegrand f = [&](std::span<const double> z, std::span<double> out) {
      double k = field.k(z);
      if (std::isfinite(profile.alpha())) k = std::max(k, profile.alpha());
      const double h = h_value(model, z);
      const double fk = profile.multiplier(k);
      out[0] = h * fk;
      for (int a = 0; a < l; ++a) out[1 + a] = z[a] * h * fk;
      if (!jacobian) return;
      // d/dc_j e^{-sigma(k)} = -sigma'(k) e^{-sigma(k)} (b_h,j - z_j)
      const double ds = fk > 0 && profile.in_domain(k) ? -profile.evaluate(k).d1 * fk : 0.0;
      for (int a = 0; a < l; ++a)
        for (int j = 0; j < l; ++j) out[1 + l + a * l + j] = z[a] * h * ds * (hs.barycenter[j] - z[j]);
    };
    const auto v = integrate(model.dual, f, comps, {}, {}, sigma_grading(profile, field)).values;
    Eval e;
    e.volume = v[0];
    e.F.assign(v.begin() + 1, v.begin() + 1 + l);
    if (jacobian) {
      e.J.resize(l, l);
      for (int a = 0; a < l; ++a)
        for (int j = 0; j < l; ++j) e.J(a, j) = v[1 + l + a * l + j];
    }
    return e;
  };
  // Largest t keeping c + t d strictly admissible.
  auto max_step = [&](const Point& c, const Eigen::VectorXd& d) {
    double t = kInf;
    for (const auto& w : model.dual.vertices_d) {
      double kw = 0, dk = 0;
      for (int j = 0; j < l; ++j) {
        kw -= c[j] * (w[j] - hs.barycenter[j]);
        dk -= d[j] * (w[j] - hs.barycenter[j]);
      }
      if (std::isfinite(profile.alpha()) && dk < 0)
        t = std::min(t, (kw - profile.alpha() - safeguard) / -dk);
      if (std::isfinite(profile.beta()) && dk > 0) t = std::min(t, (profile.beta() - safeguard - kw) / dk);
    }
    return std::max(t, 0.0);
  };
  Point c = c0;
  auto cur = eval(c, true);
  int capped = 0;
  for (int it = 0; it < max_iterations; ++it) {
    rep.iterations = it;
    const double res = norm(cur.F) / cur.volume;
    rep.residual = res;
    if (res <= tol) {
      rep.converged = true;
      break;
    }
    Eigen::VectorXd F(l);
    for (int a = 0; a < l; ++a) F[a] = cur.F[a];
    const Eigen::VectorXd d = -cur.J.fullPivLu().solve(F);
    const double tmax = max_step(c, d);
    double t = 1.0;
    if (tmax < 1.0) {
      t = 0.9 * tmax;
      ++capped;
    } else {
      capped = 0;
    }
    Point trial(l);
    Eval next;
    const double fnorm = norm(cur.F);
    for (; t > 1e-14; t *= 0.5) {
      for (int a = 0; a < l; ++a) trial[a] = c[a] + t * d[a];
      next = eval(trial, false);
      if (norm(next.F) <= (1 - 1e-4 * t) * fnorm) break;
    }
    const auto field = field_of(c);
    const double margin = std::isfinite(profile.alpha()) ? field.k_min - profile.alpha() : kInf;
    if (t <= 1e-14 || (capped >= 3 && margin < 1e-8 * scale)) {
      rep.boundary_obstruction = capped > 0;
      rep.diagnostics = rep.boundary_obstruction ? "boundary obstruction: iterate driven to k_min = alpha"
                                                 : "line search stalled";
      break;
    }
    c = trial;
    cur = eval(c, true);
  }
  const auto field = field_of(c);
  set_margins(rep, profile, field);
  rep.last_iterate = c;
  rep.residual = norm(cur.F) / cur.volume;
  if (rep.converged) rep.c = c;
  else if (rep.diagnostics.empty()) rep.diagnostics = "iteration cap reached";
  return rep;
}

}  // namespace ksm
