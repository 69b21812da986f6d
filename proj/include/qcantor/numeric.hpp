#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "qcantor/bigint.hpp"

namespace qcantor {

// Compensated (Kahan) accumulator; keeps relative error near machine
// epsilon over very long log-sums.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// Natural log of a positive big integer via the top 53 bits; relative
// error is a few ulps regardless of magnitude.
inline double log_of(const BigInt& a) {
  if (a <= 0) throw std::domain_error("log_of: argument must be positive");
  std::uint64_t bits = bit_length(a);
  if (bits <= 53) return std::log(a.convert_to<double>());
  BigInt top = a >> (bits - 53);
  return std::log(top.convert_to<double>()) + static_cast<double>(bits - 53) * std::numbers::ln2;
}

inline double log_of(const BigRat& r) {
  if (r <= 0) throw std::domain_error("log_of: argument must be positive");
  return log_of(num(r)) - log_of(den(r));
}

// double(num)/double(den) with exponent prescaling so huge/huge works.
inline double to_double(const BigRat& r) {
  if (r == 0) return 0.0;
  bool neg = r < 0;
  BigInt n = neg ? BigInt(-num(r)) : num(r);
  const BigInt& d = den(r);
  std::int64_t shift = static_cast<std::int64_t>(bit_length(n)) - static_cast<std::int64_t>(bit_length(d));
  // Bring both operands near 2^60 before converting.
  auto scaled = [](const BigInt& v, std::int64_t s) {
    BigInt w;
    if (s >= 0) w = v << s;
    else w = v >> (-s);
    return w.convert_to<double>();
  };
  std::int64_t sn = 60 - static_cast<std::int64_t>(bit_length(n));
  std::int64_t sd = 60 - static_cast<std::int64_t>(bit_length(d));
  double mant = scaled(n, sn) / scaled(d, sd);
  double v = mant * std::pow(2.0, static_cast<double>(sd - sn));
  (void)shift;
  return neg ? -v : v;
}

namespace detail {

inline BigInt pow10(std::uint64_t e) {
  BigInt r = 1;
  BigInt b = 10;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

// round(p/q) to nearest integer, ties to even; p, q > 0.
inline BigInt round_half_even(const BigInt& p, const BigInt& q) {
  BigInt d = p / q;
  BigInt r = p % q;
  BigInt twice = r * 2;
  if (twice > q) return d + 1;
  if (twice < q) return d;
  return (d % 2 == 0) ? d : d + 1;
}

}  // namespace detail

// Exact decimal rendering of a rational at `sig` significant digits,
// round-half-even. Fixed notation for decimal exponents in [-4, 15],
// scientific otherwise. Deterministic: no locale, no doubles.
inline std::string decimal_string(const BigRat& x, int sig = 12) {
  if (sig < 1) throw std::domain_error("decimal_string: sig must be >= 1");
  if (x == 0) return "0";
  bool neg = x < 0;
  BigInt a = neg ? BigInt(-num(x)) : num(x);
  BigInt b = den(x);

  // Decimal exponent e with 10^e <= a/b < 10^{e+1}.
  double approx = (log_of(a) - log_of(b)) / std::numbers::ln10;
  std::int64_t e = static_cast<std::int64_t>(std::floor(approx));
  auto cmp_pow = [&](std::int64_t k) {
    // sign of a/b - 10^k
    BigInt lhs = a, rhs = b;
    if (k >= 0) rhs *= detail::pow10(static_cast<std::uint64_t>(k));
    else lhs *= detail::pow10(static_cast<std::uint64_t>(-k));
    return lhs.compare(rhs);
  };
  while (cmp_pow(e) < 0) --e;
  while (cmp_pow(e + 1) >= 0) ++e;

  // m = round(a/b * 10^{sig-1-e}), then sig digits of m are the mantissa.
  std::int64_t s = sig - 1 - e;
  BigInt p = a, q = b;
  if (s >= 0) p *= detail::pow10(static_cast<std::uint64_t>(s));
  else q *= detail::pow10(static_cast<std::uint64_t>(-s));
  BigInt m = detail::round_half_even(p, q);
  std::string digits = m.str();
  if (static_cast<int>(digits.size()) > sig) {  // rounded up to the next power of ten
    digits.resize(static_cast<std::size_t>(sig));
    ++e;
  }

  std::string out;
  if (e >= -4 && e <= 15) {
    if (e >= sig - 1) {
      out = digits + std::string(static_cast<std::size_t>(e - sig + 1), '0');
    } else if (e >= 0) {
      out = digits.substr(0, static_cast<std::size_t>(e + 1)) + "." + digits.substr(static_cast<std::size_t>(e + 1));
    } else {
      out = "0." + std::string(static_cast<std::size_t>(-e - 1), '0') + digits;
    }
  } else {
    out = digits.substr(0, 1);
    if (sig > 1) out += "." + digits.substr(1);
    out += "e" + std::string(e >= 0 ? "+" : "-") + std::to_string(e >= 0 ? e : -e);
  }
  return neg ? "-" + out : out;
}

}  // namespace qcantor
