#pragma once

// Exact rational scalar used for dyadic set arithmetic: every double is a
// binary rational, so double -> Rational conversions are exact and the
// stopping-rule comparisons built on them are tie-free.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>

namespace csl {

using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double x) { return x; }

// 2^k as an exact rational, k may be negative
inline Rational rational_pow2(int k) {
  using boost::multiprecision::cpp_int;
  if (k >= 0) return Rational(cpp_int(1) << k, 1);
  return Rational(1, cpp_int(1) << (-k));
}

template <class T>
inline T scalar_abs(const T& x) {
  return x < T(0) ? T(-x) : x;
}

}  // namespace csl
