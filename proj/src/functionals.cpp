#include <ksm/errors.hpp>
#include <ksm/functionals.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ksm {

double FiberField::k(std::span<const double> z) const {
  double s = C_V;
  for (std::size_t i = 0; i < c.size(); ++i) s -= c[i] * z[i];
  return s;
}

namespace {

void fill_range(FiberField& f, const DualPolytope& dual) {
  f.k_min = SigmaProfile::inf;
  f.k_max = -SigmaProfile::inf;
  for (const auto& w : dual.vertices_d) {
    const double v = f.k(w);
    f.k_min = std::min(f.k_min, v);
    f.k_max = std::max(f.k_max, v);
  }
}

}  // namespace

FiberField normalize_field(const Point& c, const HStats& stats, const DualPolytope& dual) {
  if (static_cast<int>(c.size()) != dual.dimension) throw InvalidInput("field dimension mismatch");
  FiberField f;
  f.c = c;
  f.C_V = 0;
  for (std::size_t i = 0; i < c.size(); ++i) f.C_V += c[i] * stats.barycenter[i];
  fill_range(f, dual);
  return f;
}

FiberField normalize_field_exact(const RatPoint& c, const ExactHMoments& moments,
                                 const DualPolytope& dual) {
  if (static_cast<int>(c.size()) != dual.dimension) throw InvalidInput("field dimension mismatch");
  FiberField f;
  f.c_exact = c;
  f.C_V_exact = dot(c, moments.barycenter);
  f.c = to_double(c);
  f.C_V = to_double(*f.C_V_exact);
  std::vector<Rational> kv;
  for (const auto& w : dual.vertices) kv.push_back(*f.C_V_exact - dot(c, w));
  f.k_vertices_exact = std::move(kv);
  fill_range(f, dual);
  if (f.k_vertices_exact) {
    const auto [lo, hi] = std::minmax_element(f.k_vertices_exact->begin(), f.k_vertices_exact->end());
    f.k_min = to_double(*lo);
    f.k_max = to_double(*hi);
  }
  return f;
}

double boundary_tolerance(const SigmaProfile& profile, const FiberField& field) {
  double scale = 1.0 + std::abs(field.k_min) + std::abs(field.k_max);
  if (std::isfinite(profile.alpha())) scale += std::abs(profile.alpha());
  return 1e-12 * scale;
}

bool field_admissible(const SigmaProfile& profile, const FiberField& field, bool allow_touch) {
  const double tol = boundary_tolerance(profile, field);
  if (!(field.k_max < profile.beta())) return false;
  if (!std::isfinite(profile.alpha())) return true;
  if (field.k_min > profile.alpha() + tol) return true;
  return allow_touch && field.k_min >= profile.alpha() - tol;
}

std::optional<Grading> sigma_grading(const SigmaProfile& profile, const FiberField& field) {
  if (!std::isfinite(profile.alpha())) return std::nullopt;
  Grading g;
  for (double ci : field.c) g.normal.push_back(-ci);
  g.offset = field.C_V - profile.alpha();
  return g;
}

double g_value(const KSMModel& model, const SigmaProfile& profile, const FiberField& field,
               std::span<const double> z) {
  double k = field.k(z);
  if (k < profile.alpha()) {
    if (k >= profile.alpha() - boundary_tolerance(profile, field)) k = profile.alpha();
  }
  return h_value(model, z) * profile.multiplier(k);
}

double g_weight(const KSMModel& model, const SigmaProfile& profile, const FiberField& field,
                std::span<const double> z) {
  h_weight(model, z);  // containment check
  return g_value(model, profile, field, z);
}

double GStats::barycenter_norm() const {
  double s = 0;
  for (double b : barycenter) s += b * b;
  return std::sqrt(s);
}

namespace {

// Maximum of f = e^{-sigma} on [lo, hi]: dense scan then golden refinement.
double max_multiplier(const SigmaProfile& p, double lo, double hi) {
  auto f = [&](double t) { return p.multiplier(t); };
  double best = std::max(f(lo), f(hi));
  if (hi <= lo) return best;
  const int n = 256;
  int arg = -1;
  for (int i = 1; i < n; ++i) {
    const double t = lo + (hi - lo) * i / n;
    const double v = f(t);
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  if (arg < 0) return best;
  double a = lo + (hi - lo) * (arg - 1) / n;
  double b = lo + (hi - lo) * (arg + 1) / n;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100 && b - a > 1e-15 * (1 + std::abs(a)); ++it) {
    const double x1 = b - gr * (b - a);
    const double x2 = a + gr * (b - a);
    if (f(x1) < f(x2)) a = x1;
    else b = x2;
  }
  return std::max(best, f(0.5 * (a + b)));
}

}  // namespace

GStats g_stats(const KSMModel& model, const SigmaProfile& profile, const FiberField& field,
               const QuadratureRule& rule) {
  if (!field_admissible(profile, field, true)) {
    std::ostringstream os;
    os << "field potential range [" << field.k_min << ", " << field.k_max
       << "] is not admissible for " << profile.describe();
    throw DomainError(os.str());
  }
  const int l = model.dimension();
  VectorIntegrand f = [&](std::span<const double> z, std::span<double> out) {
    const double g = g_value(model, profile, field, z);
    out[0] = g;
    for (int k = 0; k < l; ++k) out[1 + k] = z[k] * g;
  };
  auto res = integrate(model.dual, f, 1 + l, rule, {}, sigma_grading(profile, field));
  if (!res.converged && res.error_estimate > 1e-8 * std::max(1.0, std::abs(res.values[0])))
    throw QuadratureError("g moments did not converge");
  GStats s;
  s.volume = res.values[0];
  s.error_estimate = res.error_estimate;
  for (int k = 0; k < l; ++k) {
    s.futaki.push_back(res.values[1 + k]);
    s.barycenter.push_back(res.values[1 + k] / s.volume);
  }
  const double kmin = std::max(field.k_min, profile.alpha());
  s.A = profile.multiplier(kmin);
  s.B = max_multiplier(profile, kmin, field.k_max);
  s.touches_alpha = std::isfinite(profile.alpha()) &&
                    field.k_min <= profile.alpha() + boundary_tolerance(profile, field);
  return s;
}

double PLConvex::operator()(std::span<const double> z) const {
  double best = -SigmaProfile::inf;
  for (const auto& [a, b] : pieces) {
    double s = b;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * z[k];
    best = std::max(best, s);
  }
  return best;
}

bool PLConvex::affine_on(const DualPolytope& dual) const {
  // Affine on P* iff some piece attains the max at every vertex of P*.
  for (const auto& [a, b] : pieces) {
    bool dominates = true;
    for (const auto& w : dual.vertices_d) {
      double s = b;
      for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * w[k];
      if (s < (*this)(w) - 1e-12) {
        dominates = false;
        break;
      }
    }
    if (dominates) return true;
  }
  return false;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::polystable_uniform: return "polystable+uniform";
    case Stability::polystable_non_uniform: return "polystable+non-uniform";
    case Stability::unstable: return "unstable";
  }
  return "unknown";
}

Verdict stability_verdict(const GStats& stats, const SigmaProfile& profile, const FiberField& field,
                          double tol) {
  (void)profile;
  (void)field;
  Verdict v;
  v.tolerance = tol;
  v.barycenter_norm = stats.barycenter_norm();
  if (v.barycenter_norm <= tol) {
    v.kind = stats.touches_alpha ? Stability::polystable_non_uniform : Stability::polystable_uniform;
    return v;
  }
  v.kind = Stability::unstable;
  std::size_t k = 0;
  for (std::size_t i = 1; i < stats.futaki.size(); ++i)
    if (std::abs(stats.futaki[i]) > std::abs(stats.futaki[k])) k = i;
  PLConvex phi;
  Point a(stats.futaki.size(), 0.0);
  a[k] = stats.futaki[k] > 0 ? -1.0 : 1.0;
  phi.pieces.push_back({a, 0.0});
  // Linear phi: the invariant reduces to phi(b_g).
  v.destabilizer_invariant = a[k] * stats.barycenter[k];
  v.destabilizer = std::move(phi);
  return v;
}

double ding_invariant(const PLConvex& phi, const KSMModel& model, const SigmaProfile& profile,
                      const FiberField& field, const GStats& stats) {
  const int l = model.dimension();
  // Drop duplicate pieces so that activity regions only meet on null sets.
  std::vector<std::pair<Point, double>> pieces;
  for (const auto& p : phi.pieces)
    if (std::find(pieces.begin(), pieces.end(), p) == pieces.end()) pieces.push_back(p);

  VectorIntegrand f = [&](std::span<const double> z, std::span<double> out) {
    const double g = g_value(model, profile, field, z);
    out[0] = g;
    for (int k = 0; k < l; ++k) out[1 + k] = z[k] * g;
  };
  const auto grading = sigma_grading(profile, field);
  double total = 0;
  for (std::size_t r = 0; r < pieces.size(); ++r) {
    std::vector<AffineCut> cuts;
    for (std::size_t s = 0; s < pieces.size(); ++s) {
      if (s == r) continue;
      AffineCut cut;
      for (int k = 0; k < l; ++k) cut.normal.push_back(pieces[r].first[k] - pieces[s].first[k]);
      cut.offset = pieces[r].second - pieces[s].second;
      // Ties on a common affine piece go to the lower index.
      if (std::all_of(cut.normal.begin(), cut.normal.end(), [](double x) { return x == 0.0; }) &&
          cut.offset == 0.0 && s < r)
        cut.offset = -1.0;
      cuts.push_back(std::move(cut));
    }
    auto res = integrate(model.dual, f, 1 + l, {}, cuts, grading);
    double piece = pieces[r].second * res.values[0];
    for (int k = 0; k < l; ++k) piece += pieces[r].first[k] * res.values[1 + k];
    total += piece;
  }
  const Point origin(l, 0.0);
  return total / stats.volume - phi(origin);
}

}  // namespace ksm
