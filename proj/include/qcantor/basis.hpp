#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qcantor/bigint.hpp"
#include "qcantor/errors.hpp"

namespace qcantor {

// A basic sequence supplies the bases q_n >= 2 of a Cantor series
// expansion, 1-indexed. Values are immutable and safe to share.
class BasicSequence {
 public:
  static BasicSequence explicit_list(std::vector<BigInt> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 2)
        throw std::domain_error("BasicSequence: base q_" + std::to_string(i + 1) + " < 2");
    }
    auto vals = std::make_shared<std::vector<BigInt>>(std::move(values));
    std::string nm = "list:";
    for (std::size_t i = 0; i < vals->size(); ++i) {
      if (i) nm += ',';
      nm += (*vals)[i].str();
    }
    return BasicSequence(
        std::move(nm),
        [vals](std::uint64_t n) {
          if (n > vals->size())
            throw std::out_of_range("BasicSequence: explicit list has only " +
                                    std::to_string(vals->size()) + " bases, asked for q_" +
                                    std::to_string(n));
          return (*vals)[n - 1];
        },
        false, vals->size());
  }

  // q_n = n + 1: the bases 2, 3, 4, ...
  static BasicSequence successor() {
    return BasicSequence("succ", [](std::uint64_t n) { return BigInt(n) + 1; }, true);
  }

  // q_n = 2^n.
  static BasicSequence power_of_two() {
    return BasicSequence("pow2", [](std::uint64_t n) { return BigInt(1) << n; }, true);
  }

  // q_n = floor(log n) + 2, natural log.
  static BasicSequence floor_log() {
    return BasicSequence(
        "logrule",
        [](std::uint64_t n) {
          double l = std::log(static_cast<double>(n));
          return BigInt(static_cast<std::int64_t>(std::floor(l)) + 2);
        },
        true);
  }

  static BasicSequence constant(BigInt c) {
    if (c < 2) throw std::domain_error("BasicSequence: constant base < 2");
    std::string nm = "const:" + c.str();
    return BasicSequence(std::move(nm), [c](std::uint64_t) { return c; }, true);
  }

  static BasicSequence from_function(std::string name, std::function<BigInt(std::uint64_t)> fn,
                                     bool monotone, std::optional<std::uint64_t> length = {}) {
    return BasicSequence(std::move(name), std::move(fn), monotone, length);
  }

  BigInt q(std::uint64_t n) const {
    if (n == 0) throw std::domain_error("BasicSequence: index is 1-based");
    BigInt v = fn_(n);
    if (v < 2) throw std::domain_error("BasicSequence: rule produced q_" + std::to_string(n) + " < 2");
    return v;
  }

  const std::string& name() const { return name_; }
  bool monotone_nondecreasing() const { return monotone_; }
  std::optional<std::uint64_t> length() const { return length_; }

 private:
  BasicSequence(std::string name, std::function<BigInt(std::uint64_t)> fn, bool monotone,
                std::optional<std::uint64_t> length = {})
      : name_(std::move(name)), fn_(std::move(fn)), monotone_(monotone), length_(length) {}

  std::string name_;
  std::function<BigInt(std::uint64_t)> fn_;
  bool monotone_;
  std::optional<std::uint64_t> length_;
};

// An ordered tuple of non-negative digits to be counted in streams.
struct Block {
  std::vector<BigInt> digits;

  explicit Block(std::vector<BigInt> d) : digits(std::move(d)) {
    if (digits.empty()) throw std::domain_error("Block: empty");
    for (const auto& v : digits)
      if (v < 0) throw std::domain_error("Block: negative digit");
  }
  static Block of(std::initializer_list<long long> d) {
    std::vector<BigInt> v;
    for (long long x : d) v.emplace_back(x);
    return Block(std::move(v));
  }
  std::size_t size() const { return digits.size(); }
};

// Lazy digit supplier tied to a basic sequence. Generators are invoked
// sequentially (n = 1, 2, ...) under a lock; computed digits are cached,
// so repeated reads are cheap and the stream behaves as an immutable
// value. Every emitted digit is checked against 0 <= E_n < q_n.
class DigitStream {
 public:
  DigitStream(BasicSequence base, std::string source, std::function<BigInt(std::uint64_t)> gen)
      : st_(std::make_shared<State>(std::move(base), std::move(source), std::move(gen))) {}

  // Canonical expansion of x in [0, 1): E_n = floor(r * q_n), r <- r*q_n - E_n.
  static DigitStream from_rational(const BigRat& x, BasicSequence base) {
    if (x < 0 || x >= 1) throw std::domain_error("digit expansion: x outside [0,1)");
    auto rem = std::make_shared<BigRat>(x);
    BasicSequence b = base;
    return DigitStream(base, "rational:" + rational_string(x),
                       [rem, b](std::uint64_t n) {
                         BigRat scaled = *rem * BigRat(b.q(n));
                         BigInt e = rat_floor(scaled);
                         *rem = scaled - BigRat(e);
                         return e;
                       });
  }

  static DigitStream from_digits(std::vector<BigInt> digits, BasicSequence base) {
    auto d = std::make_shared<std::vector<BigInt>>(std::move(digits));
    return DigitStream(std::move(base), "list",
                       [d](std::uint64_t n) {
                         if (n > d->size())
                           throw std::out_of_range("DigitStream: finite list exhausted at n=" +
                                                   std::to_string(n));
                         return (*d)[n - 1];
                       });
  }

  BigInt digit(std::uint64_t n) const {
    if (n == 0) throw std::domain_error("DigitStream: index is 1-based");
    std::lock_guard<std::mutex> lock(st_->m);
    extend_locked(n);
    return st_->cache[n - 1];
  }

  // Visit digits 1..n in order under a single lock acquisition.
  void for_each(std::uint64_t n, const std::function<void(std::uint64_t, const BigInt&)>& fn) const {
    std::lock_guard<std::mutex> lock(st_->m);
    extend_locked(n);
    for (std::uint64_t i = 1; i <= n; ++i) fn(i, st_->cache[i - 1]);
  }

  std::vector<BigInt> prefix(std::uint64_t n) const {
    std::lock_guard<std::mutex> lock(st_->m);
    extend_locked(n);
    return std::vector<BigInt>(st_->cache.begin(), st_->cache.begin() + static_cast<std::ptrdiff_t>(n));
  }

  const BasicSequence& base() const { return st_->base; }
  const std::string& source() const { return st_->source; }

 private:
  struct State {
    State(BasicSequence b, std::string s, std::function<BigInt(std::uint64_t)> g)
        : base(std::move(b)), source(std::move(s)), gen(std::move(g)) {}
    BasicSequence base;
    std::string source;
    std::function<BigInt(std::uint64_t)> gen;
    mutable std::mutex m;
    mutable std::vector<BigInt> cache;
  };

  void extend_locked(std::uint64_t n) const {
    while (st_->cache.size() < n) {
      std::uint64_t idx = st_->cache.size() + 1;
      BigInt d = st_->gen(idx);
      if (d < 0 || d >= st_->base.q(idx))
        throw construction_error("DigitStream: digit out of range at n=" + std::to_string(idx));
      st_->cache.push_back(std::move(d));
    }
  }

  std::shared_ptr<State> st_;
};

// First n digits of the canonical expansion of x in [0, 1).
inline std::vector<BigInt> digits_of_rational(const BigRat& x, const BasicSequence& base,
                                              std::uint64_t n) {
  if (x < 0 || x >= 1) throw std::domain_error("digits_of_rational: x outside [0,1)");
  if (n == 0) throw std::domain_error("digits_of_rational: n must be >= 1");
  std::vector<BigInt> out;
  out.reserve(n);
  // Track the remainder as an explicit fraction; the denominator never
  // changes, so no per-step gcd work is needed.
  BigInt rnum = num(x);
  const BigInt rden = den(x);
  for (std::uint64_t m = 1; m <= n; ++m) {
    rnum *= base.q(m);
    BigInt e = rnum / rden;
    rnum -= e * rden;
    out.push_back(std::move(e));
  }
  return out;
}

// Sum E_m / (q_1 ... q_m), exact.
inline BigRat value_of_digits(std::span<const BigInt> digits, const BasicSequence& base) {
  BigInt acc = 0;   // running numerator over the product denominator
  BigInt prod = 1;  // q_1 ... q_m
  for (std::size_t m = 0; m < digits.size(); ++m) {
    BigInt qm = base.q(m + 1);
    if (digits[m] < 0 || digits[m] > qm - 1)
      throw std::domain_error("value_of_digits: digit out of range at position " + std::to_string(m + 1));
    acc = acc * qm + digits[m];
    prod *= qm;
  }
  return BigRat(acc, prod);
}

inline BigRat value_of_digits(const std::vector<BigInt>& digits, const BasicSequence& base) {
  return value_of_digits(std::span<const BigInt>(digits.data(), digits.size()), base);
}

// Fractional part of (q_1 ... q_n) * x; the value whose expansion is the
// digit tail of x past position n.
inline BigRat tail_fraction(const BigRat& x, const BasicSequence& base, std::uint64_t n) {
  BigInt prod = 1;
  for (std::uint64_t j = 1; j <= n; ++j) prod *= base.q(j);
  return frac_part(x * BigRat(prod));
}

// Sum over j = 1..n of 1 / (q_j q_{j+1} ... q_{j+k-1}), exact.
inline BigRat block_reciprocal_sum(const BasicSequence& base, std::uint64_t n, std::uint64_t k) {
  if (n < 1 || k < 1) throw std::domain_error("block_reciprocal_sum: n and k must be >= 1");
  BigInt window = 1;  // q_j ... q_{j+k-1}
  for (std::uint64_t j = 1; j <= k; ++j) window *= base.q(j);
  BigRat sum(1, window);
  for (std::uint64_t j = 2; j <= n; ++j) {
    window /= base.q(j - 1);
    window *= base.q(j + k - 1);
    sum += BigRat(1, window);
  }
  return sum;
}

// Partial-sum table of the order-k reciprocal sums at the given
// checkpoints. A growth diagnostic; makes no limit claim.
inline std::vector<std::pair<std::uint64_t, BigRat>> divergence_table(
    const BasicSequence& base, std::uint64_t k, const std::vector<std::uint64_t>& checkpoints) {
  if (k < 1) throw std::domain_error("divergence_table: k must be >= 1");
  for (std::size_t i = 0; i + 1 < checkpoints.size(); ++i)
    if (checkpoints[i] >= checkpoints[i + 1])
      throw std::domain_error("divergence_table: checkpoints must be strictly increasing");
  if (checkpoints.empty()) return {};
  if (checkpoints.front() < 1) throw std::domain_error("divergence_table: checkpoints start at 1");

  std::vector<std::pair<std::uint64_t, BigRat>> rows;
  BigInt window = 1;
  for (std::uint64_t j = 1; j <= k; ++j) window *= base.q(j);
  BigRat sum(1, window);
  std::size_t next = 0;
  for (std::uint64_t j = 1; j <= checkpoints.back(); ++j) {
    if (j > 1) {
      window /= base.q(j - 1);
      window *= base.q(j + k - 1);
      sum += BigRat(1, window);
    }
    if (j == checkpoints[next]) {
      rows.emplace_back(j, sum);
      ++next;
    }
  }
  return rows;
}

// min q_n over a closed index window; a diagnostic for q_n -> infinity.
inline BigInt min_base_in_window(const BasicSequence& base, std::uint64_t lo, std::uint64_t hi) {
  if (lo < 1 || lo > hi) throw std::domain_error("min_base_in_window: empty window");
  BigInt best = base.q(lo);
  for (std::uint64_t n = lo + 1; n <= hi; ++n) {
    BigInt v = base.q(n);
    if (v < best) best = v;
  }
  return best;
}

}  // namespace qcantor
