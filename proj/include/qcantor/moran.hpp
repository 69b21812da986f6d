#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "qcantor/bigint.hpp"
#include "qcantor/numeric.hpp"

namespace qcantor {

// Homogeneous Moran set data: interval length delta, branch counts n_k,
// contraction ratios c_k. Sequences are 1-indexed rules defined for every
// queried k.
struct MoranSpec {
  BigRat delta;
  std::function<BigInt(std::uint64_t)> branch_count;
  std::function<BigRat(std::uint64_t)> contraction;
  std::string name;

  static MoranSpec constant(BigInt n, BigRat c, BigRat delta = BigRat(1)) {
    std::string nm = "const(n=" + n.str() + ",c=" + rational_string(c) + ")";
    return MoranSpec{std::move(delta), [n](std::uint64_t) { return n; },
                     [c](std::uint64_t) { return c; }, std::move(nm)};
  }
};

struct MoranViolation {
  std::uint64_t k;
  std::string what;
};

// Standing hypotheses: n_k >= 1, 0 < c_k < 1, n_1 c_1 <= delta,
// n_k c_k <= 1, checked exactly up to the requested depth.
inline std::vector<MoranViolation> validate_moran_spec(const MoranSpec& spec, std::uint64_t depth) {
  std::vector<MoranViolation> out;
  if (spec.delta <= 0 || spec.delta > 1)
    out.push_back({0, "delta outside (0,1]"});
  for (std::uint64_t k = 1; k <= depth; ++k) {
    BigInt n = spec.branch_count(k);
    BigRat c = spec.contraction(k);
    if (n < 1) out.push_back({k, "branch count < 1"});
    if (c <= 0 || c >= 1) out.push_back({k, "contraction outside (0,1)"});
    if (k == 1 && BigRat(n) * c > spec.delta) out.push_back({k, "n_1*c_1 > delta"});
    if (BigRat(n) * c > 1) out.push_back({k, "n_k*c_k > 1"});
  }
  return out;
}

// Finite lower/upper dimension-bound sequences:
//   lower(k) = log(n_1...n_k) / -log(c_1...c_{k+1} n_{k+1})
//   upper(k) = log(n_1...n_k) / -log(c_1...c_k)
// computed as compensated log-sums. Entries with a non-positive
// denominator are NaN and flagged undefined.
struct DimensionBoundReport {
  std::uint64_t depth;
  std::vector<double> lower;  // index k-1
  std::vector<double> upper;
  double lower_tail_min;  // running min over the tail half, NaN-skipping
  double upper_tail_min;

  bool defined_lower(std::uint64_t k) const { return !std::isnan(lower[k - 1]); }
  bool defined_upper(std::uint64_t k) const { return !std::isnan(upper[k - 1]); }
};

inline DimensionBoundReport fww_bounds(const MoranSpec& spec, std::uint64_t K) {
  if (K < 1) throw std::domain_error("fww_bounds: depth must be >= 1");
  DimensionBoundReport rep;
  rep.depth = K;
  rep.lower.resize(K);
  rep.upper.resize(K);

  KahanSum log_n;   // sum log n_j, j <= k
  KahanSum neg_c;   // sum -log c_j, j <= k
  // One step of lookahead for the lower bound's c_{k+1}, n_{k+1}.
  double next_log_n = log_of(spec.branch_count(1));
  double next_neg_c = -log_of(spec.contraction(1));
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::uint64_t k = 1; k <= K; ++k) {
    log_n.add(next_log_n);
    neg_c.add(next_neg_c);
    next_log_n = log_of(spec.branch_count(k + 1));
    next_neg_c = -log_of(spec.contraction(k + 1));

    double a = log_n.value();
    double du = neg_c.value();
    double dl = du + next_neg_c - next_log_n;
    rep.upper[k - 1] = (du > 0) ? a / du : nan;
    rep.lower[k - 1] = (dl > 0) ? a / dl : nan;
  }

  auto tail_min = [&](const std::vector<double>& v) {
    double m = std::numeric_limits<double>::infinity();
    for (std::uint64_t k = (K + 1) / 2; k <= K; ++k)
      if (!std::isnan(v[k - 1])) m = std::min(m, v[k - 1]);
    return std::isinf(m) ? nan : m;
  };
  rep.lower_tail_min = tail_min(rep.lower);
  rep.upper_tail_min = tail_min(rep.upper);
  return rep;
}

}  // namespace qcantor
