#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <vector>

namespace ksm {

using Rational = boost::multiprecision::cpp_rational;
using RatPoint = std::vector<Rational>;
using IntPoint = std::vector<long long>;
using Point = std::vector<double>;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline Point to_double(const RatPoint& p) {
  Point out;
  out.reserve(p.size());
  for (const auto& q : p) out.push_back(to_double(q));
  return out;
}

inline RatPoint to_rational(const IntPoint& p) {
  return RatPoint(p.begin(), p.end());
}

// Accepts "p/q", "p" or a decimal string such as "0.25".
Rational parse_rational(const std::string& text);

// Nearest rational with denominator at most max_den (continued fractions).
Rational rationalize(double x, long long max_den = 1000000);

std::string to_string(const Rational& q);

Rational dot(const RatPoint& a, const RatPoint& b);

}  // namespace ksm
