#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace renorm {

// Exact rational scalar used for degrees, edge exponents and scale arithmetic.
// Desk-scale magnitudes: int64 numerators/denominators never overflow here.
using Rational = boost::rational<long long>;

// boost::rational's heterogeneous equality recurses into itself under C++20
// operator rewriting; these non-template overloads terminate the lookup.
inline bool operator==(const Rational& a, long long b) {
  return a.denominator() == 1 && a.numerator() == b;
}
inline bool operator==(const Rational& a, int b) { return a == static_cast<long long>(b); }

inline double to_double(const Rational& q) {
  return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
}

inline long long floor_div(long long a, long long b) {
  long long q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

inline long long rational_floor(const Rational& q) {
  return floor_div(q.numerator(), q.denominator());
}

inline long long rational_ceil(const Rational& q) { return -rational_floor(-q); }

std::string rational_to_string(const Rational& q);

// Accepts "p", "p/q" and plain decimals like "-1.5" (parsed exactly as p/10^k).
std::optional<Rational> parse_rational(const std::string& text);

// Degree value in the field Q(alpha0): xi_mult * alpha0 + constant.
// Kept split so that the alpha0-multiplicity survives exactly (the papers'
// "-1 minus" style degrees are the kappa-coefficient of this pair).
struct Degree {
  Rational xi_mult{0};
  Rational constant{0};

  Rational value(const Rational& alpha0) const { return xi_mult * alpha0 + constant; }

  Degree operator+(const Degree& o) const { return {xi_mult + o.xi_mult, constant + o.constant}; }
  Degree operator-(const Degree& o) const { return {xi_mult - o.xi_mult, constant - o.constant}; }
  Degree& operator+=(const Degree& o) {
    xi_mult += o.xi_mult;
    constant += o.constant;
    return *this;
  }
  bool operator==(const Degree& o) const = default;
};

std::string degree_to_string(const Degree& deg);

}  // namespace renorm
