#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include <boost/rational.hpp>

namespace fqhcb {

// Compare Rationals only against Rationals: boost::rational's mixed
// integer equality operators recurse forever under C++20 rewritten operators.
using Rational = boost::rational<std::int64_t>;

inline std::int64_t floor(const Rational& r) {
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
  return q;
}

/// Fractional part, reduced to [0, 1).
inline Rational mod1(const Rational& r) { return r - Rational(floor(r)); }

inline bool is_integer(const Rational& r) { return r.denominator() == 1; }

inline double to_double(const Rational& r) {
  return boost::rational_cast<double>(r);
}

/// Largest rational g such that a/g and b/g are both integers.
inline Rational rational_gcd(const Rational& a, const Rational& b) {
  if (a.numerator() == 0) return abs(b);
  if (b.numerator() == 0) return abs(a);
  return Rational(std::gcd(a.numerator(), b.numerator()),
                  std::lcm(a.denominator(), b.denominator()));
}

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace fqhcb
