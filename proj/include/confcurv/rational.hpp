#pragma once

// Exact rational arithmetic used for all numeric literals in expression trees.
// Arbitrary precision: high-order curvature pipelines on rescaled metrics produce
// coefficients far beyond 64-bit range.

#include <boost/functional/hash.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace confcurv {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline bool is_integer(const Rational& r) { return denominator(r) == 1; }

inline bool fits_long(const BigInt& n) {
  return n >= std::numeric_limits<long>::min() && n <= std::numeric_limits<long>::max();
}

// Floor of a rational, as a big integer (round toward negative infinity).
inline BigInt rational_floor(const Rational& r) {
  BigInt q = numerator(r) / denominator(r);  // truncates toward zero
  if (r < 0 && q * denominator(r) != numerator(r)) --q;
  return q;
}

// base^e for integer e; e < 0 requires base != 0. (The cpp_rational two-value
// constructor requires a positive denominator, so inversion flips signs here.)
inline Rational rational_pow(const Rational& base, long e) {
  if (e == 0) return Rational(1);
  if (base == 0) {
    if (e < 0) throw std::domain_error("rational_pow: zero base with negative exponent");
    return Rational(0);
  }
  const unsigned long mag = static_cast<unsigned long>(e < 0 ? -(e + 1) + 1UL : e);
  BigInt n = pow(numerator(base), static_cast<unsigned>(mag));
  BigInt d = pow(denominator(base), static_cast<unsigned>(mag));  // always > 0
  if (e >= 0) return Rational(n, d);
  if (n < 0) return Rational(-d, -n);
  return Rational(d, n);
}

// Floor of the k-th root of n >= 0.
inline BigInt integer_kth_root(const BigInt& n, unsigned k) {
  if (n < 0) throw std::domain_error("integer_kth_root: negative argument");
  if (n <= 1 || k == 1) return n;
  BigInt lo = 0, hi = BigInt(1) << (static_cast<unsigned>(msb(n)) / k + 1);
  while (lo < hi) {  // invariant: lo^k <= n < (hi+1)^k
    BigInt mid = (lo + hi + 1) / 2;
    if (pow(mid, k) <= n)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

// Largest f with f^k dividing n (n > 0). On return n == f^k * rest.
// Small-prime trial division plus a perfect-power check on the remainder; the literals
// that reach this path are tiny (metric coefficients), so this is not a bottleneck.
inline BigInt extract_kth_power_part(const BigInt& n, unsigned k, BigInt& rest) {
  BigInt f = 1;
  BigInt m = n;
  for (unsigned p = 2; p <= 97 && BigInt(p) * p <= m; p = (p == 2 ? 3 : p + 2)) {
    unsigned count = 0;
    while (m % p == 0) {
      m /= p;
      ++count;
    }
    for (unsigned i = 0; i + k <= count; i += k) f *= p;
    unsigned leftover = count % k;
    for (unsigned i = 0; i < leftover; ++i) m *= p;  // put the non-extractable part back
  }
  BigInt r = integer_kth_root(m, k);
  if (pow(r, k) == m) {
    f *= r;
    m = 1;
  }
  rest = m;
  return f;
}

inline std::size_t hash_rational(const Rational& r) {
  boost::hash<Rational> h;
  return h(r);
}

inline std::string to_string(const Rational& r) { return r.str(); }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace confcurv
