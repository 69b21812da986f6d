#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qcantor/basis.hpp"
#include "qcantor/numeric.hpp"

namespace qcantor {

// Streaming occurrence counter for one block. KMP matching keeps the
// per-digit cost O(1) amortized; occurrences may overlap and must lie
// fully inside the consumed prefix.
class BlockCountAccumulator {
 public:
  explicit BlockCountAccumulator(Block block) : block_(std::move(block)) {
    const auto& b = block_.digits;
    fail_.assign(b.size(), 0);
    for (std::size_t i = 1; i < b.size(); ++i) {
      std::size_t j = fail_[i - 1];
      while (j > 0 && b[i] != b[j]) j = fail_[j - 1];
      if (b[i] == b[j]) ++j;
      fail_[i] = j;
    }
  }

  void push(const BigInt& digit) {
    const auto& b = block_.digits;
    while (matched_ > 0 && digit != b[matched_]) matched_ = fail_[matched_ - 1];
    if (digit == b[matched_]) ++matched_;
    if (matched_ == b.size()) {
      ++count_;
      matched_ = fail_[matched_ - 1];
    }
    ++position_;
  }

  std::uint64_t count() const { return count_; }
  std::uint64_t position() const { return position_; }
  const Block& block() const { return block_; }

 private:
  Block block_;
  std::vector<std::size_t> fail_;
  std::size_t matched_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t position_ = 0;
};

// Occurrences of B fully inside the first n digits.
inline std::uint64_t count_block(const DigitStream& stream, const Block& block, std::uint64_t n) {
  BlockCountAccumulator acc(block);
  if (n > 0) stream.for_each(n, [&](std::uint64_t, const BigInt& d) { acc.push(d); });
  return acc.count();
}

// N_n(B) / sum_{j<=m} 1/(q_j...q_{j+k-1}), exact. For rule-backed bases
// m = n; explicit lists truncate the sum to the terms whose bases are all
// defined (m = min(n, len-k+1)).
inline BigRat normality_index(const DigitStream& stream, const Block& block, std::uint64_t n) {
  std::uint64_t k = block.size();
  if (n < k) throw std::domain_error("normality_index: n must be >= block length");
  std::uint64_t terms = n;
  if (auto len = stream.base().length()) {
    if (*len < k) throw std::out_of_range("normality_index: base list shorter than block");
    terms = std::min<std::uint64_t>(n, *len - k + 1);
  }
  BigRat denom = block_reciprocal_sum(stream.base(), terms, k);
  return BigRat(count_block(stream, block, n)) / denom;
}

// N(B1)/N(B2); empty when N(B2) = 0.
inline std::optional<BigRat> ratio_index(const DigitStream& stream, const Block& b1,
                                         const Block& b2, std::uint64_t n) {
  if (b1.size() != b2.size())
    throw std::domain_error("ratio_index: blocks must have equal length");
  std::uint64_t c1 = count_block(stream, b1, n);
  std::uint64_t c2 = count_block(stream, b2, n);
  if (c2 == 0) return std::nullopt;
  return BigRat(BigInt(c1), BigInt(c2));
}

// Unnormalized fraction with positive denominator; comparisons go by
// cross multiplication, no gcd work. The discrepancy scan runs on these
// because witness points can carry ten-thousand-bit denominators.
struct RawFraction {
  BigInt num;
  BigInt den;  // > 0
};

inline bool raw_less(const RawFraction& a, const RawFraction& b) {
  return a.num * b.den < b.num * a.den;
}

// Exact star discrepancy D*_N over the sorted sample:
//   max_i max(i/N - x_(i), x_(i) - (i-1)/N).
inline BigRat star_discrepancy(std::vector<RawFraction> xs) {
  if (xs.empty()) throw std::domain_error("star_discrepancy: empty sample");
  for (const auto& x : xs)
    if (x.den <= 0 || x.num < 0 || x.num >= x.den)
      throw std::domain_error("star_discrepancy: point outside [0,1)");
  std::sort(xs.begin(), xs.end(), raw_less);

  const BigInt N(xs.size());
  RawFraction best{0, 1};
  for (std::size_t i = 1; i <= xs.size(); ++i) {
    const auto& x = xs[i - 1];
    // i/N - x and x - (i-1)/N over the common denominator N*x.den.
    BigInt common = N * x.den;
    RawFraction up{BigInt(i) * x.den - x.num * N, common};
    RawFraction down{x.num * N - BigInt(i - 1) * x.den, common};
    if (raw_less(best, up)) best = up;
    if (raw_less(best, down)) best = down;
  }
  return BigRat(best.num, best.den);
}

inline BigRat star_discrepancy(const std::vector<BigRat>& points) {
  std::vector<RawFraction> xs;
  xs.reserve(points.size());
  for (const auto& p : points) xs.push_back({num(p), den(p)});
  return star_discrepancy(std::move(xs));
}

// D*_N with the bracketing note for the two-sided discrepancy.
struct DiscrepancyReport {
  std::uint64_t sample_size;
  BigRat d_star;
  std::string note;  // "d_star <= D_N <= 2*d_star"
};

inline DiscrepancyReport discrepancy_report(std::vector<BigRat> points) {
  std::uint64_t n = points.size();
  BigRat d = star_discrepancy(std::move(points));
  return DiscrepancyReport{n, d, "d_star <= D_N <= 2*d_star"};
}

// Checked perturbation inequality |D*(x) - D*(y)| <= 2*eps + Nbar(eps)/N,
// Nbar(eps) = #{n : |x_n - y_n| > eps}. Returns the evaluated sides.
struct PerturbationReport {
  BigRat d_x;
  BigRat d_y;
  BigRat difference;  // |d_x - d_y|
  BigRat bound;       // 2*eps + nbar/N
  std::uint64_t nbar;
  bool holds;
};

inline PerturbationReport disc_perturbation_check(const std::vector<BigRat>& x,
                                                  const std::vector<BigRat>& y,
                                                  const BigRat& eps) {
  if (x.size() != y.size() || x.empty())
    throw std::domain_error("disc_perturbation_check: samples must be non-empty and equal length");
  if (eps < 0) throw std::domain_error("disc_perturbation_check: eps must be >= 0");
  std::uint64_t nbar = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    BigRat diff = x[i] - y[i];
    if (diff < 0) diff = -diff;
    if (diff > eps) ++nbar;
  }
  BigRat dx = star_discrepancy(x);
  BigRat dy = star_discrepancy(y);
  BigRat diff = dx - dy;
  if (diff < 0) diff = -diff;
  BigRat bound = BigRat(2) * eps + BigRat(BigInt(nbar), BigInt(x.size()));
  return PerturbationReport{dx, dy, diff, bound, nbar, diff <= bound};
}

// Number of distinct values among E_1..E_n.
inline std::uint64_t distinct_digits(const DigitStream& stream, std::uint64_t n) {
  std::set<BigInt> seen;
  if (n > 0) stream.for_each(n, [&](std::uint64_t, const BigInt& d) { seen.insert(d); });
  return seen.size();
}

// Sorted distinct non-negative integers observed up to a horizon.
struct IntegerSetWindow {
  std::vector<BigInt> members;  // sorted, duplicate-free
  BigInt horizon;

  static IntegerSetWindow from_values(std::vector<BigInt> values, BigInt horizon) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    return IntegerSetWindow{std::move(values), std::move(horizon)};
  }

  std::uint64_t count_below(const BigInt& bound) const {
    return static_cast<std::uint64_t>(
        std::lower_bound(members.begin(), members.end(), bound) - members.begin());
  }
};

// The set of digit values appearing in the first n positions.
inline IntegerSetWindow digit_set(const DigitStream& stream, std::uint64_t n) {
  std::vector<BigInt> vals;
  vals.reserve(n);
  if (n > 0) stream.for_each(n, [&](std::uint64_t, const BigInt& d) { vals.push_back(d); });
  return IntegerSetWindow::from_values(std::move(vals), BigInt(n));
}

// #(S intersect [0, m)) / m, exact.
inline BigRat density_estimate(const IntegerSetWindow& s, const BigInt& m) {
  if (m < 1) throw std::domain_error("density_estimate: horizon must be >= 1");
  return BigRat(BigInt(s.count_below(m)), m);
}

// #(S intersect [0, n/2)): members v with v < n/2, i.e. v < ceil(n/2).
inline std::uint64_t half_window_count(const IntegerSetWindow& s, const BigInt& n) {
  return s.count_below((n + 1) / 2);
}

// log #(S intersect [0, n/2)) / log n; -infinity when the count is zero.
inline double mass_dimension_estimate(const IntegerSetWindow& s, const BigInt& n) {
  if (n < 2) throw std::domain_error("mass_dimension_estimate: n must be >= 2");
  std::uint64_t count = half_window_count(s, n);
  if (count == 0) return -std::numeric_limits<double>::infinity();
  return log_of(BigInt(count)) / log_of(n);
}

struct MassDimensionRow {
  BigInt n;
  std::uint64_t count;
  double estimate;       // -inf when count = 0
  double running_max;    // sup over rows so far (upper-dimension probe)
  double running_min;    // inf over rows so far (lower-dimension probe)
};

inline std::vector<MassDimensionRow> mass_dimension_table(const IntegerSetWindow& s,
                                                          const std::vector<BigInt>& checkpoints) {
  std::vector<MassDimensionRow> rows;
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& n : checkpoints) {
    double est = mass_dimension_estimate(s, n);
    hi = std::max(hi, est);
    lo = std::min(lo, est);
    rows.push_back(MassDimensionRow{n, half_window_count(s, n), est, hi, lo});
  }
  return rows;
}

// Normalized digits E_i/q_i for i = 1..n; the operational test points for
// distribution normality.
inline std::vector<BigRat> normalized_digit_points(const DigitStream& stream, std::uint64_t n) {
  std::vector<BigRat> pts;
  pts.reserve(n);
  stream.for_each(n, [&](std::uint64_t i, const BigInt& d) {
    pts.emplace_back(d, stream.base().q(i));
  });
  return pts;
}

// Orbit points (q_1...q_i)x mod 1 for i = 0..n-1 of a rational x.
inline std::vector<BigRat> orbit_points(const BigRat& x, const BasicSequence& base, std::uint64_t n) {
  std::vector<BigRat> pts;
  pts.reserve(n);
  BigRat t = frac_part(x);
  for (std::uint64_t i = 0; i < n; ++i) {
    pts.push_back(t);
    t = frac_part(t * BigRat(base.q(i + 1)));
  }
  return pts;
}

}  // namespace qcantor
