#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qcantor {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

inline BigInt pow2(std::uint64_t e) { return BigInt(1) << e; }

// Number of bits in a > 0 (msb index + 1).
inline std::uint64_t bit_length(const BigInt& a) {
  if (a <= 0) throw std::domain_error("bit_length: argument must be positive");
  return static_cast<std::uint64_t>(boost::multiprecision::msb(a)) + 1;
}

inline BigInt isqrt(const BigInt& a) {
  if (a < 0) throw std::domain_error("isqrt: negative argument");
  return boost::multiprecision::sqrt(a);
}

inline BigInt num(const BigRat& r) { return boost::multiprecision::numerator(r); }
inline BigInt den(const BigRat& r) { return boost::multiprecision::denominator(r); }

// Floor division for b > 0 and any sign of a.
inline BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if (a % b != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

inline BigInt rat_floor(const BigRat& x) { return floor_div(num(x), den(x)); }

inline BigInt rat_ceil(const BigRat& x) {
  BigInt f = rat_floor(x);
  return (BigRat(f) == x) ? f : f + 1;
}

// x - floor(x), always in [0, 1).
inline BigRat frac_part(const BigRat& x) { return x - BigRat(rat_floor(x)); }

// Decimal integer parse; tolerates leading zeros (cpp_int's string
// constructor would read them as octal).
inline BigInt parse_int(const std::string& text) {
  std::string s = text;
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s = s.substr(1);
  }
  std::size_t nz = s.find_first_not_of('0');
  s = (nz == std::string::npos) ? "0" : s.substr(nz);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw std::domain_error("parse_int: cannot parse '" + text + "'");
  BigInt v(s);
  return neg ? BigInt(-v) : v;
}

// Accepts "p/q", integers, decimals ("0.25"), and scientific notation
// ("1.5e-3"); all parsed exactly.
inline BigRat parse_rational(const std::string& text) {
  if (text.empty()) throw std::domain_error("parse_rational: empty string");
  auto bad = [&] { throw std::domain_error("parse_rational: cannot parse '" + text + "'"); };
  std::size_t slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      BigInt n = parse_int(text.substr(0, slash));
      BigInt d = parse_int(text.substr(slash + 1));
      if (d == 0) throw std::domain_error("parse_rational: zero denominator");
      return BigRat(n, d);
    }
    std::size_t epos = text.find_first_of("eE");
    if (epos != std::string::npos) {
      BigRat mant = parse_rational(text.substr(0, epos));
      long long ex = std::stoll(text.substr(epos + 1));
      BigInt scale = 1;
      for (long long i = 0; i < (ex < 0 ? -ex : ex); ++i) scale *= 10;
      return ex < 0 ? mant / BigRat(scale) : mant * BigRat(scale);
    }
    std::size_t dot = text.find('.');
    if (dot == std::string::npos) return BigRat(parse_int(text));
    std::string ip = text.substr(0, dot);
    std::string fp = text.substr(dot + 1);
    if (fp.empty()) bad();
    bool neg = !ip.empty() && ip[0] == '-';
    if (ip.empty() || ip == "-" || ip == "+") ip += '0';
    BigInt scale = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) scale *= 10;
    BigInt whole = parse_int(ip);
    BigInt frac = parse_int(fp);
    BigInt total = whole * scale;
    if (neg) total -= frac;
    else total += frac;
    return BigRat(total, scale);
  } catch (const std::domain_error&) {
    throw;
  } catch (const std::exception&) {
    bad();
  }
  return BigRat();  // unreachable
}

inline std::string rational_string(const BigRat& r) {
  std::string s = num(r).str();
  if (den(r) != 1) s += "/" + den(r).str();
  return s;
}

}  // namespace qcantor
