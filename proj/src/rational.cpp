#include <ksm/errors.hpp>
#include <ksm/rational.hpp>

#include <cmath>
#include <sstream>

namespace ksm {

namespace {

using boost::multiprecision::cpp_int;

cpp_int parse_integer(const std::string& s) {
  if (s.empty() || s == "-" || s == "+") throw InvalidInput("empty number in '" + s + "'");
  std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  for (std::size_t i = start; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') throw InvalidInput("not an integer: '" + s + "'");
  cpp_int v(s.substr(start));
  return s[0] == '-' ? cpp_int(-v) : v;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

Rational parse_rational(const std::string& text) {
  const std::string s = trim(text);
  if (auto slash = s.find('/'); slash != std::string::npos) {
    cpp_int num = parse_integer(trim(s.substr(0, slash)));
    cpp_int den = parse_integer(trim(s.substr(slash + 1)));
    if (den == 0) throw InvalidInput("zero denominator in '" + s + "'");
    return Rational(num, den);
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    if (digits == "-" || digits == "+" || digits.empty()) digits += "0";
    cpp_int scale = 1;
    for (std::size_t i = dot + 1; i < s.size(); ++i) scale *= 10;
    return Rational(parse_integer(digits), scale);
  }
  return Rational(parse_integer(s));
}

Rational rationalize(double x, long long max_den) {
  if (!std::isfinite(x)) throw InvalidInput("cannot rationalize a non-finite value");
  // Continued-fraction convergents h/k.
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    double a = std::floor(r);
    if (std::abs(a) > 9e15) break;
    long long ai = static_cast<long long>(a);
    long long h2 = ai * h1 + h0;
    long long k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  if (k1 == 0) return Rational(static_cast<long long>(std::llround(x)));
  return Rational(h1, k1);
}

std::string to_string(const Rational& q) {
  std::ostringstream os;
  os << numerator(q);
  if (denominator(q) != 1) os << '/' << denominator(q);
  return os.str();
}

Rational dot(const RatPoint& a, const RatPoint& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace ksm
