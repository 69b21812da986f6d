#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qcantor/basis.hpp"
#include "qcantor/errors.hpp"
#include "qcantor/pattern.hpp"
#include "qcantor/rng.hpp"
#include "qcantor/sequences.hpp"
#include "qcantor/stats.hpp"

namespace qcantor {

// Run metadata carried by every witness construction; echoed into CLI
// output headers for reproducibility.
struct Provenance {
  std::string construction;
  std::string base_rule;
  std::string source;
  std::optional<std::uint64_t> seed;
  std::uint64_t horizon = 0;
  std::vector<std::pair<std::string, std::string>> extras;
};

// Deterministic point sources in [0,1). The "golden" kinds evaluate the
// rotation by (sqrt(5)-1)/2 through a fixed-precision dyadic approximant
// (exact rational outputs, documented precision), so every consumer sees
// the same x_n bit for bit.
class UDSource {
 public:
  static UDSource golden(std::uint64_t precision_bits = 128) {
    UDSource s;
    s.kind_ = Kind::Golden;
    s.prec_ = precision_bits;
    s.name_ = "weyl-golden(bits=" + std::to_string(precision_bits) + ")";
    s.shared_ = std::make_shared<GoldenState>();
    return s;
  }

  // Golden rotation squeezed into [0, 1/2): deliberately not uniformly
  // distributed mod 1.
  static UDSource scaled_golden(std::uint64_t precision_bits = 128) {
    UDSource s = golden(precision_bits);
    s.kind_ = Kind::ScaledGolden;
    s.name_ = "scaled-non-ud(bits=" + std::to_string(precision_bits) + ")";
    return s;
  }

  // frac(n * a) for a user-supplied rational approximant a.
  static UDSource rotation(const BigRat& a) {
    UDSource s;
    s.kind_ = Kind::Rotation;
    s.alpha_ = frac_part(a);
    s.name_ = "weyl-alpha(" + rational_string(a) + ")";
    return s;
  }

  static UDSource constant(const BigRat& c) {
    if (c < 0 || c >= 1) throw std::domain_error("UDSource: constant outside [0,1)");
    UDSource s;
    s.kind_ = Kind::Constant;
    s.alpha_ = c;
    s.name_ = "constant(" + rational_string(c) + ")";
    return s;
  }

  // x_n as an unnormalized fraction (denominator positive).
  RawFraction point_raw(std::uint64_t n) const {
    switch (kind_) {
      case Kind::Golden:
      case Kind::ScaledGolden: {
        const BigInt& g = golden_numerator();
        BigInt d = BigInt(1) << (prec_ + 1);
        BigInt v = (BigInt(n) * g) & (d - 1);
        if (kind_ == Kind::ScaledGolden) d <<= 1;
        return RawFraction{std::move(v), std::move(d)};
      }
      case Kind::Rotation: {
        BigInt v = (BigInt(n) * num(alpha_)) % den(alpha_);
        return RawFraction{std::move(v), den(alpha_)};
      }
      case Kind::Constant:
        return RawFraction{num(alpha_), den(alpha_)};
    }
    return RawFraction{0, 1};
  }

  BigRat point(std::uint64_t n) const {
    RawFraction f = point_raw(n);
    return BigRat(f.num, f.den);
  }

  const std::string& name() const { return name_; }
  std::uint64_t precision_bits() const { return prec_; }

 private:
  enum class Kind { Golden, ScaledGolden, Rotation, Constant };

  struct GoldenState {
    std::mutex m;
    BigInt numerator;  // floor(((sqrt(5)-1)/2) * 2^{prec+1})
    bool ready = false;
  };

  const BigInt& golden_numerator() const {
    std::lock_guard<std::mutex> lock(shared_->m);
    if (!shared_->ready) {
      BigInt five_sq = isqrt(BigInt(5) << (2 * (prec_ + 1)));
      shared_->numerator = five_sq - (BigInt(1) << (prec_ + 1));
      shared_->ready = true;
    }
    return shared_->numerator;
  }

  Kind kind_ = Kind::Constant;
  std::uint64_t prec_ = 0;
  BigRat alpha_;
  std::string name_;
  std::shared_ptr<GoldenState> shared_;
};

// Digits drawn independently and uniformly from {0,..,p_n-1} (or from
// {1,..,p_n-1} with forbid_zero) by a seeded generator. The constructive
// stand-in for an expansion with almost-surely normal statistics; all
// downstream checks are statistical and seed-pinned.
inline DigitStream pseudo_normal_stream(BasicSequence base, std::uint64_t seed,
                                        bool forbid_zero = false) {
  auto rng = std::make_shared<Rng>(seed);
  BasicSequence b = base;
  std::string src = std::string("pseudo-normal(seed=") + std::to_string(seed) +
                    (forbid_zero ? ",forbid-zero" : "") + ")";
  return DigitStream(base, std::move(src), [rng, b, forbid_zero](std::uint64_t n) {
    BigInt p = b.q(n);
    BigInt lo = forbid_zero ? 1 : 0;
    return lo + rng->below_big(p - lo);
  });
}

struct LambdaCaps {
  std::uint64_t tail_log_search = 200000;
  std::uint64_t nu_search = 200000;
  std::uint64_t upsilon_search = 200000;
};

// The position bookkeeping behind the ratio-normal witness: the marker
// indices L_n, their first-crossing sub-evaluations, the sparse position
// set S = union of runs {L_n,..,L_n+n-1}, and the per-position window
// width omega_n.
//
// Conventions (each the unique reading consistent with L_n's use):
//   - nu_n is an offset from L_{n-1}: the least tau with
//     sum of the n logs after L_{n-1} < (1/n) * sum of the first tau logs
//     after L_{n-1}, for all later tau (monotone, so first crossing).
//   - upsilon_{n,k} is an absolute index: least j with
//     n * Q_n^(k) < sum_{i<=j} P_{i-k+1}^(k), exact rationals.
//   - The tail-log term is the least t with log q_j > n for all j >= t,
//     scanned up to a cap (exact for monotone rules).
class LambdaTable {
 public:
  explicit LambdaTable(BasicSequence q, LambdaCaps caps = {})
      : q_(std::move(q)), p_(BasicSequence::floor_log()), caps_(caps) {
    l_.push_back(0);  // L_0
  }

  const BasicSequence& base() const { return q_; }
  const BasicSequence& inner_base() const { return p_; }
  const LambdaCaps& caps() const { return caps_; }

  std::uint64_t L(std::uint64_t n) {
    while (l_.size() <= n) compute_next();
    return l_[n];
  }

  std::uint64_t nu(std::uint64_t n) {
    L(n);  // fills the memo
    return nu_.at(n);
  }

  std::uint64_t tail_log_first(std::uint64_t n) {
    std::uint64_t j = 1;
    std::uint64_t last_bad = 0;
    bool monotone = q_.monotone_nondecreasing();
    for (; j <= caps_.tail_log_search; ++j) {
      bool bad = log_q(j) <= static_cast<double>(n);
      if (bad) last_bad = j;
      if (!bad && monotone) return j;
    }
    if (monotone || last_bad == caps_.tail_log_search)
      throw horizon_error("lambda: tail-log search exhausted at cap " +
                          std::to_string(caps_.tail_log_search) + " for n=" + std::to_string(n));
    return last_bad + 1;
  }

  // Least offset tau >= 1 past L_{n-1} where the run/gap log ratio stays
  // below 1/n.
  std::uint64_t nu_value(std::uint64_t n, std::uint64_t l_prev) {
    double numer = 0.0;
    for (std::uint64_t i = 1; i <= n; ++i) numer += log_q(l_prev + i);
    double denom = 0.0;
    for (std::uint64_t tau = 1; tau <= caps_.nu_search; ++tau) {
      denom += log_q(l_prev + tau);
      if (static_cast<double>(n) * numer < denom) return tau;
    }
    throw horizon_error("lambda: nu search exhausted at cap " + std::to_string(caps_.nu_search) +
                        " for n=" + std::to_string(n));
  }

  // Least absolute j with n * Q_n^(k) < sum_{i<=j} P_{i-k+1}^(k).
  std::uint64_t upsilon_value(std::uint64_t n, std::uint64_t k) {
    BigRat target = BigRat(BigInt(n)) * block_reciprocal_sum(q_, n, k);
    auto& tab = p_tables_[k];
    for (std::uint64_t j = std::max<std::uint64_t>(k, 1); j <= caps_.upsilon_search; ++j) {
      if (target < inner_sum(tab, k, j)) return j;
    }
    throw horizon_error("lambda: upsilon search exhausted at cap " +
                        std::to_string(caps_.upsilon_search) + " for n=" + std::to_string(n) +
                        ", k=" + std::to_string(k));
  }

  // max{j : L_j <= pos}; extends the table as needed.
  std::uint64_t block_index(std::uint64_t pos) {
    while (l_.back() <= pos) compute_next();
    std::uint64_t j = static_cast<std::uint64_t>(
        std::upper_bound(l_.begin(), l_.end(), pos) - l_.begin());
    return j - 1;
  }

  // Run j covering pos (L_j <= pos <= L_j + j - 1), or 0.
  std::uint64_t run_of(std::uint64_t pos) {
    std::uint64_t j = block_index(pos);
    if (j >= 1 && pos <= l_[j] + (j - 1)) return j;
    return 0;
  }

  double log_q(std::uint64_t n) {
    while (logq_.size() < n) {
      std::uint64_t idx = logq_.size() + 1;
      logq_.push_back(log_of(q_.q(idx)));
      cumlog_.push_back((cumlog_.empty() ? 0.0 : cumlog_.back()) + logq_.back());
    }
    return logq_[n - 1];
  }

  double cum_log_q(std::uint64_t n) {  // sum_{j<=n} log q_j
    if (n == 0) return 0.0;
    log_q(n);
    return cumlog_[n - 1];
  }

  double eps(std::uint64_t n) {
    double lq = log_q(n);
    double lp = cum_log_q(n - 1);
    return std::sqrt(std::min(lp, lq)) / lq;
  }

  // omega_n = min(2^floor((1-eps)*log2 q_n), q_n - 1), a power of two
  // within a factor 2 of q_n^{1-eps}; omega_n/q_n <= q_n^{-eps} < 1.
  BigInt omega(std::uint64_t n) {
    double log2q = log_q(n) / std::numbers::ln2;
    double e = (1.0 - eps(n)) * log2q;
    BigInt w = (e <= 0) ? BigInt(1) : (BigInt(1) << static_cast<std::uint64_t>(std::floor(e)));
    BigInt cap = q_.q(n) - 1;
    return std::min(w, cap);
  }

 private:
  struct InnerTables {
    std::vector<BigRat> partial;  // P_m^(k)
    std::vector<BigRat> summed;   // sum_{m<=r} P_m^(k)
    BigInt window = 0;            // p_m ... p_{m+k-1} for the next m
  };

  // sum_{i<=j} P_{i-k+1}^(k) = sum_{m<=j-k+1} P_m^(k).
  const BigRat& inner_sum(InnerTables& tab, std::uint64_t k, std::uint64_t j) {
    static const BigRat zero(0);
    if (j < k) return zero;
    std::uint64_t r = j - k + 1;
    while (tab.partial.size() < r) {
      std::uint64_t m = tab.partial.size() + 1;
      if (m == 1) {
        tab.window = 1;
        for (std::uint64_t l = 1; l <= k; ++l) tab.window *= p_.q(l);
      } else {
        tab.window /= p_.q(m - 1);
        tab.window *= p_.q(m + k - 1);
      }
      BigRat prev = tab.partial.empty() ? BigRat(0) : tab.partial.back();
      tab.partial.push_back(prev + BigRat(1, tab.window));
      BigRat prev_sum = tab.summed.empty() ? BigRat(0) : tab.summed.back();
      tab.summed.push_back(prev_sum + tab.partial.back());
    }
    return tab.summed[r - 1];
  }

  void compute_next() {
    std::uint64_t n = l_.size();  // computing L_n
    std::uint64_t prev = l_[n - 1];
    std::uint64_t nu_n = nu_value(n, prev);
    nu_[n] = nu_n;
    std::uint64_t best = tail_log_first(n);
    best = std::max(best, prev + n * n);
    best = std::max(best, prev + nu_n);
    for (std::uint64_t k = 1; k <= n; ++k) best = std::max(best, upsilon_value(n, k));
    l_.push_back(best);
  }

  BasicSequence q_;
  BasicSequence p_;
  LambdaCaps caps_;
  std::vector<std::uint64_t> l_;
  std::map<std::uint64_t, std::uint64_t> nu_;
  std::map<std::uint64_t, InnerTables> p_tables_;
  std::vector<double> logq_;
  std::vector<double> cumlog_;
};

// Marker-index evaluation with its sub-terms, for inspection.
struct LambdaIndexReport {
  std::uint64_t n;
  std::uint64_t tail_log_term;
  std::uint64_t square_term;    // L_{n-1} + n^2
  std::uint64_t nu_term;        // L_{n-1} + nu_n
  std::uint64_t upsilon_term;   // max_k upsilon_{n,k}
  std::uint64_t value;          // L_n
};

inline LambdaIndexReport lambda_index_report(LambdaTable& table, std::uint64_t n) {
  if (n < 1) throw std::domain_error("lambda_index_report: n must be >= 1");
  std::uint64_t prev = table.L(n - 1);
  LambdaIndexReport rep;
  rep.n = n;
  rep.tail_log_term = table.tail_log_first(n);
  rep.square_term = prev + n * n;
  rep.nu_term = prev + table.nu(n);
  rep.upsilon_term = 0;
  for (std::uint64_t k = 1; k <= n; ++k)
    rep.upsilon_term = std::max(rep.upsilon_term, table.upsilon_value(n, k));
  rep.value = table.L(n);
  return rep;
}

// Streaming witness for the ratio-normal / distribution-normal / not-normal
// combination: inside runs of S the digits spell the inner stream xi in
// order; elsewhere the digit is the nearest integer to x_n*q_n inside the
// clipped window [x_n q_n - omega_n, x_n q_n + omega_n) cap [ceil(log i(n)), q_n-1].
class LambdaWitness {
 public:
  LambdaWitness(BasicSequence q, UDSource x, DigitStream xi, std::uint64_t horizon,
                LambdaCaps caps = {})
      : table_(std::make_shared<LambdaTable>(q, caps)),
        x_(std::move(x)),
        xi_(std::move(xi)),
        stream_(make_stream(table_, x_, xi_, q)),
        horizon_(horizon) {
    table_->block_index(horizon);  // materialize the L-table through the horizon
    prov_.construction = "lambda";
    prov_.base_rule = q.name();
    prov_.source = x_.name() + ";xi=" + xi_.source();
    prov_.horizon = horizon;
  }

  const DigitStream& stream() const { return stream_; }
  LambdaTable& table() { return *table_; }
  const Provenance& provenance() const { return prov_; }

  bool in_s(std::uint64_t n) const { return table_->run_of(n) >= 1; }

  // 1-based index into xi for an S-position: runs spell xi continuously.
  std::uint64_t xi_index(std::uint64_t n) const {
    std::uint64_t j = table_->run_of(n);
    if (j == 0) throw std::domain_error("xi_index: position not in S");
    return j * (j - 1) / 2 + (n - table_->L(j)) + 1;
  }

  RawFraction x_point_raw(std::uint64_t n) const { return x_.point_raw(n); }
  BigInt omega(std::uint64_t n) const { return table_->omega(n); }

  // Exact structural check for one position: S-positions must carry the
  // xi digit, others must satisfy |E_n/q_n - x_n| <= omega_n/q_n.
  bool check_digit(std::uint64_t n) const {
    BigInt e = stream_.digit(n);
    if (in_s(n)) return e == xi_.digit(xi_index(n));
    RawFraction x = x_.point_raw(n);
    BigInt q = stream_.base().q(n);
    // |e*den - x.num*q| <= omega*den
    BigInt lhs = e * x.den - x.num * q;
    if (lhs < 0) lhs = -lhs;
    return lhs <= table_->omega(n) * x.den;
  }

 private:
  static DigitStream make_stream(std::shared_ptr<LambdaTable> tab, UDSource x, DigitStream xi,
                                 BasicSequence q) {
    std::string src = "lambda(" + q.name() + ";" + x.name() + ")";
    return DigitStream(q, std::move(src), [tab, x, xi](std::uint64_t n) {
      std::uint64_t run = tab->run_of(n);
      if (run >= 1) {
        std::uint64_t idx = run * (run - 1) / 2 + (n - tab->L(run)) + 1;
        return xi.digit(idx);
      }
      BigInt q_n = tab->base().q(n);
      RawFraction xf = x.point_raw(n);
      BigInt a = xf.num * q_n;         // target = a / d
      const BigInt& d = xf.den;
      BigInt w = tab->omega(n);

      // Nearest integer to a/d, ties toward the lower digit.
      BigInt e0 = a / d;
      if ((a - e0 * d) * 2 > d) ++e0;

      std::uint64_t i = tab->block_index(n);
      BigInt clip_lo = (i <= 1) ? BigInt(0)
                                : BigInt(static_cast<std::int64_t>(
                                      std::ceil(std::log(static_cast<double>(i)))));
      BigInt lo = floor_div(a - w * d + d - 1, d);  // ceil((a - w*d)/d)
      lo = std::max(lo, clip_lo);
      BigInt hi = floor_div(a + w * d + d - 1, d) - 1;  // last digit below (a + w*d)/d
      BigInt top = q_n - 1;
      hi = std::min(hi, top);
      if (lo > hi)
        throw construction_error("lambda: empty digit window at n=" + std::to_string(n) +
                                 " (clip " + clip_lo.str() + ", omega " + w.str() + ")");
      return std::min(std::max(e0, lo), hi);
    });
  }

  std::shared_ptr<LambdaTable> table_;
  UDSource x_;
  DigitStream xi_;
  DigitStream stream_;
  std::uint64_t horizon_;
  Provenance prov_;
};

// A named integer-sequence rule for pattern parameters.
struct NamedSeq {
  std::string name;
  std::function<BigInt(std::uint64_t)> fn;
};

namespace rules {

inline NamedSeq constant(BigInt v) {
  return {"const:" + v.str(), [v](std::uint64_t) { return v; }};
}
inline NamedSeq identity() {
  return {"ident", [](std::uint64_t n) { return BigInt(n); }};
}
inline NamedSeq pow2() {
  return {"pow2", [](std::uint64_t n) { return BigInt(1) << n; }};
}
// floor(log n) + c
inline NamedSeq floor_log_plus(std::int64_t c) {
  return {"floorlog:" + std::to_string(c), [c](std::uint64_t n) {
            return BigInt(static_cast<std::int64_t>(std::floor(std::log(static_cast<double>(n)))) + c);
          }};
}
// floor(log log (n + shift)) + c
inline NamedSeq floor_log_log_plus(std::int64_t shift, std::int64_t c) {
  return {"floorloglog:" + std::to_string(shift) + "," + std::to_string(c),
          [shift, c](std::uint64_t n) {
            double v = std::log(std::log(static_cast<double>(n) + static_cast<double>(shift)));
            return BigInt(static_cast<std::int64_t>(std::floor(v)) + c);
          }};
}

}  // namespace rules

// floor(beta^(1 - (1/log beta)^(1/2))) + 1, the upper end of the
// prescribed digit range.
inline BigInt ndn_digit_bound(const BigInt& beta) {
  long double lb = static_cast<long double>(log_of(beta));
  long double e = 1.0L - std::sqrt(1.0L / lb);
  long double v = std::exp(e * lb);
  return BigInt(static_cast<long long>(std::floor(v))) + 1;
}

// Pattern parameters for the normal-but-not-distribution-normal witness:
// I_i = {alpha_i, ..., ndn_digit_bound(beta_i)}, forced digits from a
// seeded pseudo-normal stream over the concatenated-alpha sequence.
struct NdnTheta {
  PatternParams params;
  std::shared_ptr<IndexMap> index;
  BasicSequence q;   // the pattern sequence
  BasicSequence p;   // concatenated alpha-slot bases
  DigitStream xi;    // forced-digit source
  Provenance prov;
};

inline NdnTheta make_ndn_theta(const NamedSeq& alpha, const NamedSeq& beta, const NamedSeq& s,
                               const NamedSeq& t, const NamedSeq& upsilon, std::uint64_t seed,
                               std::uint64_t validate_positions = 0) {
  std::string pname = "a=" + alpha.name + ",b=" + beta.name + ",s=" + s.name + ",t=" + t.name +
                      ",u=" + upsilon.name;

  // Index skeleton first: the concatenated-alpha sequence only needs the
  // block shapes, not digit sets or forced digits.
  PatternParams skel;
  skel.alpha = alpha.fn;
  skel.beta = beta.fn;
  skel.s = s.fn;
  skel.t = t.fn;
  skel.upsilon = upsilon.fn;
  skel.forced = [](const BigInt&) -> BigInt {
    throw std::logic_error("ndn skeleton has no forced digits");
  };
  skel.digit_sets = [](std::uint64_t) { return DigitSet::closed_range(0, -1); };
  skel.name = pname;
  auto skel_index = make_index_map(skel);

  BasicSequence p = BasicSequence::from_function(
      "concat-alpha(" + pname + ")",
      [skel_index, a = alpha.fn](std::uint64_t m) { return a(skel_index->slot_block(BigInt(m))); },
      false);
  DigitStream xi = pseudo_normal_stream(p, seed);

  PatternParams params = skel;
  params.forced = [xi](const BigInt& m) { return xi.digit(m.convert_to<std::uint64_t>()); };
  params.digit_sets = [a = alpha.fn, b = beta.fn](std::uint64_t i) {
    return DigitSet::closed_range(a(i), ndn_digit_bound(b(i)));
  };
  auto index = make_index_map(params);

  // Eager validation over the blocks a run of the requested length will
  // touch: every block with beta-positions needs a non-empty digit range.
  if (validate_positions > 0) {
    BigInt end_prev = 0;
    for (std::uint64_t i = 1; end_prev < validate_positions; ++i) {
      if (t.fn(i) >= 1) {
        BigInt a_i = alpha.fn(i);
        BigInt bound = ndn_digit_bound(beta.fn(i));
        if (bound < a_i)
          throw construction_error("ndn: empty digit range at block " + std::to_string(i) +
                                   " (alpha=" + a_i.str() + ", bound=" + bound.str() + ")");
      }
      end_prev += upsilon.fn(i) * (s.fn(i) + t.fn(i));
    }
  }

  NdnTheta out{std::move(params), index, build_pattern_q(index), std::move(p), std::move(xi), {}};
  out.prov.construction = "ndn";
  out.prov.base_rule = out.q.name();
  out.prov.source = out.xi.source();
  out.prov.seed = seed;
  out.prov.horizon = validate_positions;
  return out;
}

// The paper-scale example parameter bundles.
inline std::array<NamedSeq, 5> example_one_rules() {
  return {rules::floor_log_log_plus(2, 2), rules::floor_log_plus(2), rules::floor_log_plus(0),
          rules::identity(), rules::pow2()};
}

inline std::array<NamedSeq, 5> example_two_rules(std::uint64_t ell) {
  NamedSeq alpha = rules::floor_log_log_plus(2, 2);
  NamedSeq beta = rules::floor_log_plus(2);
  NamedSeq s = rules::floor_log_plus(0);
  NamedSeq t{"ratio-pow:" + std::to_string(ell),
             [a = alpha.fn, b = beta.fn, sf = s.fn, ell](std::uint64_t n) {
               BigInt bn = b(n), an = a(n), sn = sf(n);
               BigInt p = boost::multiprecision::pow(bn, static_cast<unsigned>(ell + 1));
               BigInt q = boost::multiprecision::pow(an, static_cast<unsigned>(ell + 1));
               return floor_div(p * sn, q);
             }};
  return {alpha, beta, s, t, rules::pow2()};
}

// Witness whose digit set equals a target set S: at sparse forced
// positions tau_j (tau_j > tau_{j-1}^2, q_{tau_j} > value) the digit is
// the j-th value of a revisiting enumeration of S; elsewhere a seeded
// uniform pick from S cap [0, q_k - 2].
class DigitRangeWitness {
 public:
  DigitRangeWitness(BasicSequence q, IntegerSequence target, std::uint64_t seed,
                    std::uint64_t horizon)
      : target_(std::move(target)), horizon_(horizon) {
    // Forced positions within the horizon.
    std::uint64_t prev = 1;
    for (std::uint64_t j = 1;; ++j) {
      if (prev > horizon) break;  // tau_j would exceed the horizon anyway
      BigInt value = enumeration_value(j);
      std::uint64_t start = (prev > horizon / prev) ? horizon + 1 : prev * prev + 1;
      std::uint64_t tau = 0;
      for (std::uint64_t idx = start; idx <= horizon; ++idx) {
        if (q.q(idx) > value) {
          tau = idx;
          break;
        }
      }
      if (tau == 0) break;
      forced_pos_.push_back(tau);
      forced_val_.push_back(value);
      prev = tau;
    }

    auto rng = std::make_shared<Rng>(seed);
    auto fp = std::make_shared<std::vector<std::uint64_t>>(forced_pos_);
    auto fv = std::make_shared<std::vector<BigInt>>(forced_val_);
    IntegerSequence tgt = target_;
    BasicSequence base = q;
    std::string src = "digitrange(" + target_.name() + ";seed=" + std::to_string(seed) + ")";
    stream_ = DigitStream(q, std::move(src), [rng, fp, fv, tgt, base](std::uint64_t k) {
      auto it = std::lower_bound(fp->begin(), fp->end(), k);
      if (it != fp->end() && *it == k) return (*fv)[static_cast<std::size_t>(it - fp->begin())];
      BigInt limit = base.q(k) - 2;
      std::uint64_t cnt = (limit < 0) ? 0 : tgt.count_upto(limit);
      if (cnt == 0)
        throw std::domain_error("digitrange: target set empty below base at position " +
                                std::to_string(k) + " (min S >= q_k - 1)");
      return tgt.kth(rng->below(cnt));
    });

    prov_.construction = "digitrange";
    prov_.base_rule = q.name();
    prov_.source = target_.name();
    prov_.seed = seed;
    prov_.horizon = horizon;
  }

  const DigitStream& stream() const { return *stream_; }
  const std::vector<std::uint64_t>& forced_positions() const { return forced_pos_; }
  const std::vector<BigInt>& forced_values() const { return forced_val_; }
  const Provenance& provenance() const { return prov_; }

  // j-th value (1-based) of the enumeration 0; 0,1; 0,1,2; ... of target
  // ranks — every member is revisited infinitely often.
  BigInt enumeration_value(std::uint64_t j) const {
    std::uint64_t r = 1;
    while (r * (r + 1) / 2 < j) ++r;
    std::uint64_t pos = j - r * (r - 1) / 2;  // 1..r
    if (auto sz = target_.size()) pos = ((pos - 1) % *sz) + 1;
    return target_.kth(pos - 1);
  }

  // First position by which the lowest `first_k` members of the target
  // all appeared in the stream, scanning at most `limit` digits.
  std::optional<std::uint64_t> coverage_horizon(std::uint64_t first_k, std::uint64_t limit) const {
    std::vector<BigInt> wanted;
    for (std::uint64_t j = 0; j < first_k; ++j) wanted.push_back(target_.kth(j));
    std::sort(wanted.begin(), wanted.end());
    std::uint64_t remaining = first_k;
    std::vector<bool> seen(first_k, false);
    std::optional<std::uint64_t> answer;
    stream_->for_each(limit, [&](std::uint64_t pos, const BigInt& d) {
      if (answer || remaining == 0) return;
      auto it = std::lower_bound(wanted.begin(), wanted.end(), d);
      if (it != wanted.end() && *it == d) {
        std::size_t idx = static_cast<std::size_t>(it - wanted.begin());
        if (!seen[idx]) {
          seen[idx] = true;
          if (--remaining == 0) answer = pos;
        }
      }
    });
    return answer;
  }

 private:
  IntegerSequence target_;
  std::uint64_t horizon_;
  std::vector<std::uint64_t> forced_pos_;
  std::vector<BigInt> forced_val_;
  std::optional<DigitStream> stream_;
  Provenance prov_;
};

}  // namespace qcantor
