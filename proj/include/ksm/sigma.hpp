#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ksm {

enum class SigmaKind { constant, linear, mabuchi_log, tau_mix, custom };

std::string to_string(SigmaKind kind);

struct SigmaValue {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
};

class SigmaProfile {
 public:
  static constexpr double inf = std::numeric_limits<double>::infinity();

  // sigma = c on (alpha, beta).
  static SigmaProfile constant(double c, double alpha = -inf, double beta = inf);
  // sigma(s) = -s + shift on the real line.
  static SigmaProfile linear(double shift = 0.0);
  // sigma(s) = -log(s + shift) on (-shift, inf).
  static SigmaProfile mabuchi_log(double shift = 1.0);
  // sigma(s) = -(1 - tau) s - tau log(s + 1) on (-1, inf).
  static SigmaProfile tau_mix(double tau);
  // Monotone cubic interpolation of (t, sigma) samples, domain = sample span.
  static SigmaProfile custom(std::vector<std::pair<double, double>> samples);

  SigmaKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double parameter() const { return param_; }
  const std::vector<std::pair<double, double>>& samples() const { return samples_; }

  bool in_domain(double t) const { return t > alpha_ && t < beta_; }
  // True when sigma tends to +infinity at alpha (f = e^{-sigma} vanishes there).
  bool blows_up_at_alpha() const;

  // Throws DomainError outside the open interval (alpha, beta).
  SigmaValue evaluate(double t) const;

  // f(t) = e^{-sigma(t)}, extended continuously to t = alpha when alpha is
  // finite (0 if sigma blows up). Throws DomainError for t < alpha or t >= beta.
  double multiplier(double t) const;

  std::string describe() const;

 private:
  SigmaKind kind_ = SigmaKind::constant;
  double param_ = 0;
  double alpha_ = -inf;
  double beta_ = inf;
  std::vector<std::pair<double, double>> samples_;
  std::vector<double> slopes_;  // Hermite derivatives at the samples

  double interpolate(double t) const;
};

struct AdmissibilityReport {
  bool condition_i = false;   // sigma' <= 0 <= sigma''
  bool condition_ii = false;  // sigma'' > 0
  double max_d1 = 0;
  double min_d2 = 0;
  double range_lo = 0;
  double range_hi = 0;
  bool numeric = false;       // derivatives from finite differences
  bool admissible() const { return condition_i || condition_ii; }
};

// Samples sigma' and sigma'' on [lo, hi] clipped to the open domain. The
// default range is the domain itself, cut at +-10 where it is unbounded; a
// supplied working range is inflated by 10% first.
AdmissibilityReport check_admissible(const SigmaProfile& profile, int samples,
                                     std::optional<std::pair<double, double>> working_range = {});

struct GrowthReport {
  bool applicable = false;  // alpha finite
  bool holds = false;
  double a0 = 0;            // min of f(t) / (t - alpha) on the grid
  double t_at_min = 0;
  std::string detail;
};

// Checks f(t) >= A0 (t - alpha) on a geometric grid in t - alpha from 1e-12 up
// to `span` (default: beta - alpha, or 1e6 on an unbounded domain). Fails when
// the minimal ratio is attained at the far end while still decreasing, i.e.
// no uniform constant exists on the sampled range.
GrowthReport check_growth(const SigmaProfile& profile, std::optional<double> span = {});

}  // namespace ksm
