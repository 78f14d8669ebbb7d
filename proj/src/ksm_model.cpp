#include <ksm/errors.hpp>
#include <ksm/ksm_model.hpp>

#include <cmath>
#include <limits>

namespace ksm {

KSMValidation validate_ksm(const KSMData& data) {
  KSMValidation out;
  if (data.l != data.polytope.dimension)
    out.violations.push_back("fiber dimension does not match the polytope dimension");
  if (data.n != static_cast<int>(data.mu.size()))
    out.violations.push_back("expected " + std::to_string(data.n) + " curvature vectors, got " +
                             std::to_string(data.mu.size()));
  for (const auto& m : data.mu)
    if (static_cast<int>(m.size()) != data.l) {
      out.violations.push_back("curvature vector of wrong dimension");
      return out;
    }
  if (!out.violations.empty()) return out;

  const DualPolytope dual = dual_polytope(data.polytope);
  for (std::size_t a = 0; a < data.mu.size(); ++a) {
    for (int k = 0; k < dual.vertex_count(); ++k) {
      Rational s = 1 + dot(data.mu[a], dual.vertices[k]);
      if (!out.margin || s < *out.margin) out.margin = s;
      if (s <= 0)
        out.violations.push_back("-mu_" + std::to_string(a + 1) +
                                 " is not interior to P: 1 + <mu, w> = " + to_string(s) +
                                 " at dual vertex " + std::to_string(k));
    }
  }
  return out;
}

KSMModel make_model(KSMData data) {
  auto v = validate_ksm(data);
  if (!v.valid()) {
    std::string msg = "invalid KSM data:";
    for (const auto& s : v.violations) msg += " " + s + ";";
    throw InvalidInput(msg);
  }
  KSMModel m;
  m.dual = dual_polytope(data.polytope);
  for (const auto& mu : data.mu) m.mu.push_back(to_double(mu));
  m.data = std::move(data);
  return m;
}

double h_value(const KSMModel& model, std::span<const double> z) {
  double h = 1.0;
  for (const auto& mu : model.mu) {
    double s = 1.0;
    for (std::size_t k = 0; k < mu.size(); ++k) s += mu[k] * z[k];
    h *= s;
  }
  return h;
}

double h_weight(const KSMModel& model, std::span<const double> z) {
  if (static_cast<int>(z.size()) != model.dimension())
    throw DomainError("point has the wrong dimension");
  if (!model.dual.contains(z)) throw DomainError("point lies outside the dual polytope");
  return h_value(model, z);
}

bool HStats::ke_criterion(double rel_tol) const {
  double norm = 0;
  for (double d : ke_defect) norm = std::max(norm, std::abs(d));
  return norm <= rel_tol * volume;
}

HStats h_stats(const KSMModel& model, const QuadratureRule& rule) {
  const int l = model.dimension();
  VectorIntegrand f = [&](std::span<const double> z, std::span<double> out) {
    const double h = h_value(model, z);
    out[0] = h;
    for (int k = 0; k < l; ++k) out[1 + k] = z[k] * h;
  };
  auto res = integrate(model.dual, f, 1 + l, rule);
  if (!res.converged) throw QuadratureError("h moments did not converge");
  HStats s;
  s.volume = res.values[0];
  s.error_estimate = res.error_estimate;
  for (int k = 0; k < l; ++k) {
    s.ke_defect.push_back(res.values[1 + k]);
    s.barycenter.push_back(res.values[1 + k] / s.volume);
  }
  return s;
}

std::optional<ExactHMoments> exact_h_moments(const KSMModel& model) {
  if (model.dimension() != 1) return std::nullopt;
  // Coefficients of h as a polynomial in z, lowest degree first.
  std::vector<Rational> poly{Rational(1)};
  for (const auto& mu : model.data.mu) {
    std::vector<Rational> next(poly.size() + 1, Rational(0));
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + 1] += poly[i] * mu[0];
    }
    poly = std::move(next);
  }
  Rational lo = model.dual.vertices.front()[0];
  Rational hi = model.dual.vertices.back()[0];
  auto antideriv = [&](int shift, const Rational& x) {
    Rational s = 0, power = x;  // x^(i + shift + 1)
    for (int e = 0; e < shift; ++e) power *= x;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      s += poly[i] * power / Rational(static_cast<long long>(i + shift + 1));
      power *= x;
    }
    return s;
  };
  ExactHMoments m;
  m.volume = antideriv(0, hi) - antideriv(0, lo);
  m.moments = {antideriv(1, hi) - antideriv(1, lo)};
  m.barycenter = {m.moments[0] / m.volume};
  return m;
}

LogSumExp log_sum_exp(std::span<const Point> points, std::span<const double> log_weights,
                      std::span<const double> y) {
  const std::size_t l = y.size();
  std::vector<double> expo(points.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    double s = log_weights[i];
    if (s == -std::numeric_limits<double>::infinity()) {
      expo[i] = s;
      continue;
    }
    for (std::size_t k = 0; k < l; ++k) s += points[i][k] * y[k];
    expo[i] = s;
    mx = std::max(mx, s);
  }
  if (!std::isfinite(mx)) throw DomainError("log-sum-exp of an empty family");
  double total = 0;
  Point mean(l, 0.0);
  std::vector<double> second(l * l, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (expo[i] == -std::numeric_limits<double>::infinity()) continue;
    const double w = std::exp(expo[i] - mx);
    total += w;
    for (std::size_t a = 0; a < l; ++a) {
      mean[a] += w * points[i][a];
      for (std::size_t b = 0; b < l; ++b) second[a * l + b] += w * points[i][a] * points[i][b];
    }
  }
  LogSumExp out;
  out.value = mx + std::log(total);
  out.gradient.resize(l);
  for (std::size_t a = 0; a < l; ++a) out.gradient[a] = mean[a] / total;
  out.hessian.resize(l * l);
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b)
      out.hessian[a * l + b] = second[a * l + b] / total - out.gradient[a] * out.gradient[b];
  return out;
}

double reference_potential_uP(const KSMModel& model, std::span<const double> y) {
  std::vector<Point> pts;
  for (const auto& a : model.dual.lattice_points) pts.emplace_back(a.begin(), a.end());
  std::vector<double> zero(pts.size(), 0.0);
  return log_sum_exp(pts, zero, y).value;
}

}  // namespace ksm
