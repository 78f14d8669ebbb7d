#include <ksm/errors.hpp>
#include <ksm/sigma.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ksm {

std::string to_string(SigmaKind kind) {
  switch (kind) {
    case SigmaKind::constant: return "constant";
    case SigmaKind::linear: return "linear";
    case SigmaKind::mabuchi_log: return "mabuchi_log";
    case SigmaKind::tau_mix: return "tau_mix";
    case SigmaKind::custom: return "custom";
  }
  return "unknown";
}

SigmaProfile SigmaProfile::constant(double c, double alpha, double beta) {
  if (!(alpha < beta)) throw InvalidInput("empty sigma domain");
  SigmaProfile p;
  p.kind_ = SigmaKind::constant;
  p.param_ = c;
  p.alpha_ = alpha;
  p.beta_ = beta;
  return p;
}

SigmaProfile SigmaProfile::linear(double shift) {
  SigmaProfile p;
  p.kind_ = SigmaKind::linear;
  p.param_ = shift;
  return p;
}

SigmaProfile SigmaProfile::mabuchi_log(double shift) {
  SigmaProfile p;
  p.kind_ = SigmaKind::mabuchi_log;
  p.param_ = shift;
  p.alpha_ = -shift;
  return p;
}

SigmaProfile SigmaProfile::tau_mix(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidInput("tau must lie in [0, 1]");
  SigmaProfile p;
  p.kind_ = SigmaKind::tau_mix;
  p.param_ = tau;
  p.alpha_ = -1.0;
  return p;
}

SigmaProfile SigmaProfile::custom(std::vector<std::pair<double, double>> samples) {
  if (samples.size() < 2) throw InvalidInput("custom sigma needs at least two samples");
  std::sort(samples.begin(), samples.end());
  for (std::size_t i = 0; i + 1 < samples.size(); ++i)
    if (!(samples[i + 1].first > samples[i].first)) throw InvalidInput("custom sigma samples must have distinct t");
  for (const auto& [t, s] : samples)
    if (!std::isfinite(t) || !std::isfinite(s)) throw InvalidInput("custom sigma samples must be finite");
  SigmaProfile p;
  p.kind_ = SigmaKind::custom;
  p.alpha_ = samples.front().first;
  p.beta_ = samples.back().first;
  // Fritsch-Carlson monotone Hermite slopes.
  const std::size_t n = samples.size();
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = samples[i + 1].first - samples[i].first;
    delta[i] = (samples[i + 1].second - samples[i].second) / h[i];
  }
  p.slopes_.assign(n, 0.0);
  p.slopes_[0] = delta[0];
  p.slopes_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0) continue;
    const double w1 = 2 * h[i] + h[i - 1];
    const double w2 = h[i] + 2 * h[i - 1];
    p.slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
  }
  p.samples_ = std::move(samples);
  return p;
}

bool SigmaProfile::blows_up_at_alpha() const {
  switch (kind_) {
    case SigmaKind::mabuchi_log: return true;
    case SigmaKind::tau_mix: return param_ > 0.0;
    default: return false;
  }
}

double SigmaProfile::interpolate(double t) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const auto& s) { return v < s.first; });
  std::size_t i = it == samples_.begin() ? 0 : static_cast<std::size_t>(it - samples_.begin()) - 1;
  i = std::min(i, samples_.size() - 2);
  const double h = samples_[i + 1].first - samples_[i].first;
  const double s = (t - samples_[i].first) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * samples_[i].second + h10 * h * slopes_[i] + h01 * samples_[i + 1].second +
         h11 * h * slopes_[i + 1];
}

SigmaValue SigmaProfile::evaluate(double t) const {
  if (!in_domain(t)) {
    std::ostringstream os;
    os << "t = " << t << " outside the sigma domain (" << alpha_ << ", " << beta_ << ")";
    throw DomainError(os.str());
  }
  switch (kind_) {
    case SigmaKind::constant: return {param_, 0.0, 0.0};
    case SigmaKind::linear: return {-t + param_, -1.0, 0.0};
    case SigmaKind::mabuchi_log: {
      const double x = t + param_;
      return {-std::log(x), -1.0 / x, 1.0 / (x * x)};
    }
    case SigmaKind::tau_mix: {
      const double tau = param_;
      const double x = t + 1.0;
      const double log_term = tau == 0.0 ? 0.0 : tau * std::log(x);
      return {-(1.0 - tau) * t - log_term, -(1.0 - tau) - tau / x, tau / (x * x)};
    }
    case SigmaKind::custom: {
      const double scale = beta_ - alpha_;
      double h = 1e-5 * scale;
      h = std::min({h, 0.5 * (t - alpha_), 0.5 * (beta_ - t)});
      const double v = interpolate(t);
      const double vp = interpolate(t + h);
      const double vm = interpolate(t - h);
      return {v, (vp - vm) / (2 * h), (vp - 2 * v + vm) / (h * h)};
    }
  }
  return {};
}

double SigmaProfile::multiplier(double t) const {
  if (t < alpha_ || t >= beta_ || std::isnan(t)) {
    std::ostringstream os;
    os << "t = " << t << " outside the closed-open sigma domain [" << alpha_ << ", " << beta_ << ")";
    throw DomainError(os.str());
  }
  switch (kind_) {
    case SigmaKind::constant: return std::exp(-param_);
    case SigmaKind::linear: return std::exp(t - param_);
    case SigmaKind::mabuchi_log: return t + param_;
    case SigmaKind::tau_mix: {
      const double tau = param_;
      const double x = t + 1.0;
      const double power = tau == 0.0 ? 1.0 : std::pow(x, tau);
      return power * std::exp((1.0 - tau) * t);
    }
    case SigmaKind::custom: return std::exp(-interpolate(t));
  }
  return 0.0;
}

std::string SigmaProfile::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  switch (kind_) {
    case SigmaKind::constant: os << "(c=" << param_ << ")"; break;
    case SigmaKind::linear: os << "(shift=" << param_ << ")"; break;
    case SigmaKind::mabuchi_log: os << "(shift=" << param_ << ")"; break;
    case SigmaKind::tau_mix: os << "(tau=" << param_ << ")"; break;
    case SigmaKind::custom: os << "(" << samples_.size() << " samples)"; break;
  }
  return os.str();
}

AdmissibilityReport check_admissible(const SigmaProfile& profile, int samples,
                                     std::optional<std::pair<double, double>> working_range) {
  const double a = profile.alpha(), b = profile.beta();
  double lo, hi;
  if (working_range) {
    const double pad = 0.1 * std::max(working_range->second - working_range->first, 1e-3);
    lo = working_range->first - pad;
    hi = working_range->second + pad;
  } else {
    lo = std::isfinite(a) ? a : (std::isfinite(b) ? b - 20.0 : -10.0);
    hi = std::isfinite(b) ? b : (std::isfinite(a) ? a + 20.0 : 10.0);
  }
  const double width = hi - lo;
  const double eps = 1e-6 * width;
  if (std::isfinite(a)) lo = std::max(lo, a + eps);
  if (std::isfinite(b)) hi = std::min(hi, b - eps);

  AdmissibilityReport rep;
  rep.range_lo = lo;
  rep.range_hi = hi;
  rep.numeric = profile.kind() == SigmaKind::custom;
  rep.max_d1 = -SigmaProfile::inf;
  rep.min_d2 = SigmaProfile::inf;
  const int n = std::max(samples, 2);
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * i / (n - 1);
    const auto v = profile.evaluate(t);
    rep.max_d1 = std::max(rep.max_d1, v.d1);
    rep.min_d2 = std::min(rep.min_d2, v.d2);
  }
  const double tol = rep.numeric ? 1e-6 : 1e-12;
  rep.condition_i = rep.max_d1 <= tol && rep.min_d2 >= -tol;
  rep.condition_ii = rep.min_d2 > (rep.numeric ? tol : 0.0);
  return rep;
}

GrowthReport check_growth(const SigmaProfile& profile, std::optional<double> span) {
  GrowthReport rep;
  const double a = profile.alpha();
  if (!std::isfinite(a)) {
    rep.detail = "not applicable: alpha is infinite";
    return rep;
  }
  rep.applicable = true;
  double top = span ? *span : (std::isfinite(profile.beta()) ? profile.beta() - a : 1e6);
  if (std::isfinite(profile.beta())) top = std::min(top, (profile.beta() - a) * (1 - 1e-9));
  const int per_decade = 20;
  const double lo = 1e-12;
  const int n = static_cast<int>(std::ceil(per_decade * std::log10(top / lo))) + 1;
  double best = SigmaProfile::inf, at = 0, last_ratio = 0, prev_ratio = 0;
  for (int i = 0; i < n; ++i) {
    const double target = i + 1 == n ? top : lo * std::pow(10.0, static_cast<double>(i) / per_decade);
    const double d = (a + target) - a;  // offset actually represented by a + target
    const double ratio = profile.multiplier(a + d) / d;
    prev_ratio = last_ratio;
    last_ratio = ratio;
    if (ratio < best) {
      best = ratio;
      at = a + d;
    }
  }
  rep.a0 = best;
  rep.t_at_min = at;
  const bool decreasing_at_end =
      last_ratio < prev_ratio * (1 - 1e-9) && last_ratio <= best * (1 + 1e-12);
  rep.holds = best > 0 && !decreasing_at_end;
  std::ostringstream os;
  if (rep.holds) os << "f(t) >= " << best << " (t - alpha) on the sampled range";
  else if (best <= 0) os << "f vanishes inside the domain";
  else os << "ratio f(t)/(t - alpha) keeps decreasing at t = " << at << "; no uniform constant";
  rep.detail = os.str();
  return rep;
}

}  // namespace ksm
