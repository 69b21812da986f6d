#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qcantor/basis.hpp"
#include "qcantor/errors.hpp"
#include "qcantor/moran.hpp"
#include "qcantor/numeric.hpp"
#include "qcantor/rng.hpp"
#include "qcantor/sequences.hpp"

namespace qcantor {

// A finite non-empty-or-empty set of digit values, addressable by rank.
class DigitSet {
 public:
  // {lo, lo+1, ..., hi}; empty when hi < lo.
  static DigitSet closed_range(BigInt lo, BigInt hi) {
    DigitSet s;
    s.kind_ = Kind::Range;
    s.lo_ = std::move(lo);
    s.hi_ = std::move(hi);
    return s;
  }

  static DigitSet from_list(std::vector<BigInt> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (const auto& v : values)
      if (v < 0) throw std::domain_error("DigitSet: negative digit");
    DigitSet s;
    s.kind_ = Kind::List;
    s.values_ = std::make_shared<std::vector<BigInt>>(std::move(values));
    return s;
  }

  // seq intersect [0, max_value].
  static DigitSet truncated_sequence(IntegerSequence seq, BigInt max_value) {
    DigitSet s;
    s.kind_ = Kind::Truncated;
    s.seq_ = std::make_shared<IntegerSequence>(std::move(seq));
    s.hi_ = std::move(max_value);
    return s;
  }

  bool empty() const { return size() == 0; }

  BigInt size() const {
    switch (kind_) {
      case Kind::Range: return hi_ < lo_ ? BigInt(0) : hi_ - lo_ + 1;
      case Kind::List: return BigInt(values_->size());
      case Kind::Truncated: return hi_ < 0 ? BigInt(0) : BigInt(seq_->count_upto(hi_));
    }
    return BigInt(0);
  }

  BigInt nth(const BigInt& rank) const {
    if (rank < 0 || rank >= size()) throw std::out_of_range("DigitSet: rank out of range");
    switch (kind_) {
      case Kind::Range: return lo_ + rank;
      case Kind::List: return (*values_)[rank.convert_to<std::size_t>()];
      case Kind::Truncated: return seq_->kth(rank.convert_to<std::uint64_t>());
    }
    return BigInt(0);
  }

  BigInt min_value() const { return nth(0); }

  bool contains(const BigInt& v) const {
    switch (kind_) {
      case Kind::Range: return v >= lo_ && v <= hi_;
      case Kind::List: return std::binary_search(values_->begin(), values_->end(), v);
      case Kind::Truncated: {
        if (v < 0 || v > hi_) return false;
        std::uint64_t c = seq_->count_upto(v);
        return c > 0 && seq_->kth(c - 1) == v;
      }
    }
    return false;
  }

 private:
  enum class Kind { Range, List, Truncated };
  Kind kind_ = Kind::Range;
  BigInt lo_{0}, hi_{-1};
  std::shared_ptr<std::vector<BigInt>> values_;
  std::shared_ptr<IntegerSequence> seq_;
};

// The parameter bundle for interleaved-pattern basic sequences and their
// digit constraints. All per-block sequences are 1-indexed. Blocks with
// upsilon*(s+t) = 0 contribute no positions and are skipped.
struct PatternParams {
  std::function<BigInt(std::uint64_t)> alpha;    // >= 2
  std::function<BigInt(std::uint64_t)> beta;     // >= 2
  std::function<BigInt(std::uint64_t)> s;        // >= 0
  std::function<BigInt(std::uint64_t)> t;        // >= 0
  std::function<BigInt(std::uint64_t)> upsilon;  // >= 1
  std::function<BigInt(const BigInt&)> forced;   // F_m, 1-based slot ordinal
  std::function<DigitSet(std::uint64_t)> digit_sets;  // I_i
  std::string name;
};

// Position bookkeeping for a pattern sequence. Each block i contributes
// upsilon_i repetitions of [s_i alpha-slots][t_i beta-slots]; this class
// maps between absolute positions, block indices, and alpha-slot
// ordinals, with cached prefix sums (arbitrary precision: upsilon may be
// 2^i). Thread-safe; the caches grow monotonically under a lock.
class IndexMap {
 public:
  explicit IndexMap(PatternParams params) : p_(std::move(params)) {}

  const PatternParams& params() const { return p_; }

  struct BlockInfo {
    BigInt s, t, upsilon;
    BigInt len;        // upsilon * (s + t)
    BigInt end;        // positions through this block
    BigInt alpha_end;  // alpha slots through this block
  };

  // Smallest i whose cumulative position count reaches n.
  std::uint64_t block_of_position(const BigInt& n) const {
    if (n < 1) throw std::domain_error("IndexMap: positions are 1-based");
    std::lock_guard<std::mutex> lock(m_);
    ensure_position_locked(n);
    return find_first_end_geq(n);
  }

  // True at beta-slots: the 0-based offset within the repetition is >= s_i.
  bool is_beta_position(const BigInt& n) const {
    auto loc = locate(n);
    return loc.offset >= loc.info.s;
  }

  BigInt base_at(const BigInt& n) const {
    auto loc = locate(n);
    BigInt v = (loc.offset >= loc.info.s) ? p_.beta(loc.block) : p_.alpha(loc.block);
    if (v < 2) throw std::domain_error("IndexMap: pattern base < 2 at block " + std::to_string(loc.block));
    return v;
  }

  // 0-based rank of alpha-slot (i, c, d): sum_{j<i} upsilon_j s_j + c*s_i + d.
  BigInt slot_index(std::uint64_t i, const BigInt& c, const BigInt& d) const {
    std::lock_guard<std::mutex> lock(m_);
    ensure_blocks_locked(i);
    const auto& info = blocks_[i - 1];
    if (c < 0 || c >= info.upsilon || d < 0 || d >= info.s)
      throw std::domain_error("IndexMap: (i,c,d) outside the slot domain");
    BigInt prefix = (i >= 2) ? blocks_[i - 2].alpha_end : BigInt(0);
    return prefix + c * info.s + d;
  }

  // Inverse of slot_index on 0-based ranks.
  std::tuple<std::uint64_t, BigInt, BigInt> slot_decompose(const BigInt& rank) const {
    if (rank < 0) throw std::domain_error("IndexMap: negative slot rank");
    std::lock_guard<std::mutex> lock(m_);
    ensure_alpha_locked(rank);
    std::uint64_t i = find_first_alpha_gt(rank);
    BigInt prefix = (i >= 2) ? blocks_[i - 2].alpha_end : BigInt(0);
    BigInt r = rank - prefix;
    const auto& info = blocks_[i - 1];
    return {i, r / info.s, r % info.s};
  }

  // Absolute position of the m-th alpha-slot (1-based m).
  BigInt slot_position(const BigInt& m) const {
    if (m < 1) throw std::domain_error("IndexMap: slot ordinals are 1-based");
    auto [i, c, d] = slot_decompose(m - 1);
    std::lock_guard<std::mutex> lock(m_);
    const auto& info = blocks_[i - 1];
    BigInt prefix = (i >= 2) ? blocks_[i - 2].end : BigInt(0);
    return prefix + c * (info.s + info.t) + d + 1;
  }

  // Number of alpha-slots at positions <= n. At an alpha-position this is
  // the position's own slot ordinal; slot_position is its right inverse.
  BigInt slots_upto(const BigInt& n) const {
    auto loc = locate(n);
    BigInt seen = loc.offset + 1;  // slots consumed in the current repetition
    BigInt in_block = loc.rep * loc.info.s + std::min(seen, loc.info.s);
    std::lock_guard<std::mutex> lock(m_);
    BigInt prefix = (loc.block >= 2) ? blocks_[loc.block - 2].alpha_end : BigInt(0);
    return prefix + in_block;
  }

  // Completed (block, repetition) count before the m-th alpha-slot:
  // sum_{j < i} upsilon_j + c.
  BigInt rep_count(const BigInt& m) const {
    auto [i, c, d] = slot_decompose(m - 1);
    (void)d;
    std::lock_guard<std::mutex> lock(m_);
    BigInt total = c;
    for (std::uint64_t j = 1; j < i; ++j) total += blocks_[j - 1].upsilon;
    return total;
  }

  std::uint64_t slot_block(const BigInt& m) const { return std::get<0>(slot_decompose(m - 1)); }

  DigitSet digit_set(std::uint64_t i) const { return p_.digit_sets(i); }

 private:
  struct Location {
    std::uint64_t block;
    BigInt rep;      // 0-based repetition within the block
    BigInt offset;   // 0-based offset within the repetition
    BlockInfo info;
  };

  Location locate(const BigInt& n) const {
    if (n < 1) throw std::domain_error("IndexMap: positions are 1-based");
    std::lock_guard<std::mutex> lock(m_);
    ensure_position_locked(n);
    std::uint64_t i = find_first_end_geq(n);
    const auto& info = blocks_[i - 1];
    BigInt prefix = (i >= 2) ? blocks_[i - 2].end : BigInt(0);
    BigInt r = n - prefix - 1;  // 0-based within the block
    BigInt per = info.s + info.t;
    return Location{i, r / per, r % per, info};
  }

  void ensure_blocks_locked(std::uint64_t i) const {
    while (blocks_.size() < i) append_block_locked();
  }

  void ensure_position_locked(const BigInt& n) const {
    std::uint64_t barren = 0;
    while (blocks_.empty() || blocks_.back().end < n) {
      append_block_locked();
      barren = (blocks_.back().len == 0) ? barren + 1 : 0;
      if (barren > kBarrenCap)
        throw construction_error("IndexMap: " + std::to_string(kBarrenCap) +
                                 " consecutive empty blocks; pattern has no position " + n.str());
    }
  }

  void ensure_alpha_locked(const BigInt& rank) const {
    std::uint64_t barren = 0;
    while (blocks_.empty() || blocks_.back().alpha_end <= rank) {
      append_block_locked();
      barren = (blocks_.back().s == 0 || blocks_.back().upsilon == 0) ? barren + 1 : 0;
      if (barren > kBarrenCap)
        throw construction_error("IndexMap: no alpha-slot with rank " + rank.str() +
                                 " within " + std::to_string(kBarrenCap) + " further blocks");
    }
  }

  void append_block_locked() const {
    std::uint64_t i = blocks_.size() + 1;
    BlockInfo info;
    info.s = p_.s(i);
    info.t = p_.t(i);
    info.upsilon = p_.upsilon(i);
    if (info.s < 0 || info.t < 0) throw std::domain_error("IndexMap: negative s or t");
    if (info.upsilon < 1) throw std::domain_error("IndexMap: upsilon must be >= 1");
    info.len = info.upsilon * (info.s + info.t);
    info.end = (blocks_.empty() ? BigInt(0) : blocks_.back().end) + info.len;
    info.alpha_end =
        (blocks_.empty() ? BigInt(0) : blocks_.back().alpha_end) + info.upsilon * info.s;
    blocks_.push_back(std::move(info));
  }

  std::uint64_t find_first_end_geq(const BigInt& n) const {
    auto it = std::lower_bound(blocks_.begin(), blocks_.end(), n,
                               [](const BlockInfo& b, const BigInt& v) { return b.end < v; });
    return static_cast<std::uint64_t>(it - blocks_.begin()) + 1;
  }

  std::uint64_t find_first_alpha_gt(const BigInt& rank) const {
    auto it = std::upper_bound(blocks_.begin(), blocks_.end(), rank,
                               [](const BigInt& v, const BlockInfo& b) { return v < b.alpha_end; });
    return static_cast<std::uint64_t>(it - blocks_.begin()) + 1;
  }

  static constexpr std::uint64_t kBarrenCap = 1000000;

  PatternParams p_;
  mutable std::mutex m_;
  mutable std::vector<BlockInfo> blocks_;
};

// The basic sequence spelled by the bracket pattern: beta_i at beta-slots,
// alpha_i at alpha-slots.
inline BasicSequence build_pattern_q(std::shared_ptr<const IndexMap> im) {
  std::string nm = "pattern(" + im->params().name + ")";
  return BasicSequence::from_function(
      std::move(nm), [im](std::uint64_t n) { return im->base_at(BigInt(n)); }, false);
}

inline std::shared_ptr<IndexMap> make_index_map(PatternParams params) {
  return std::make_shared<IndexMap>(std::move(params));
}

// Digit selection at beta-positions.
class DigitChooser {
 public:
  static DigitChooser minimum() {
    DigitChooser c;
    c.name_ = "min";
    return c;
  }
  static DigitChooser seeded_uniform(std::uint64_t seed) {
    DigitChooser c;
    c.name_ = "uniform(seed=" + std::to_string(seed) + ")";
    c.rng_ = std::make_shared<Rng>(seed);
    return c;
  }

  BigInt pick(const DigitSet& set) const {
    if (!rng_) return set.min_value();
    return set.nth(rng_->below_big(set.size()));
  }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::shared_ptr<Rng> rng_;  // stateful; picks happen in position order
};

// A member of the constrained digit set: forced digit F_m at the m-th
// alpha-slot, chooser's pick from I_{i(n)} at beta-slots.
inline DigitStream theta_stream(std::shared_ptr<const IndexMap> im, DigitChooser chooser) {
  BasicSequence q = build_pattern_q(im);
  std::string src = "theta(" + im->params().name + ";chooser=" + chooser.name() + ")";
  return DigitStream(q, std::move(src), [im, chooser](std::uint64_t n) {
    BigInt pos(n);
    std::uint64_t i = im->block_of_position(pos);
    if (im->is_beta_position(pos)) {
      DigitSet set = im->digit_set(i);
      if (set.empty())
        throw construction_error("theta_stream: empty digit set at block " + std::to_string(i));
      return chooser.pick(set);
    }
    BigInt m = im->slots_upto(pos);
    BigInt f = im->params().forced(m);
    if (f < 0 || f >= im->params().alpha(i))
      throw construction_error("theta_stream: forced digit " + f.str() +
                               " outside base range at position " + std::to_string(n));
    return f;
  });
}

// Moran data of a theta construction: n_k = |I_{i(k)}| at beta-slots and
// 1 at alpha-slots, c_k = 1/q_k.
inline MoranSpec theta_moran_spec(std::shared_ptr<const IndexMap> im) {
  MoranSpec spec;
  spec.delta = 1;
  spec.name = "theta(" + im->params().name + ")";
  spec.branch_count = [im](std::uint64_t k) {
    BigInt pos(k);
    if (!im->is_beta_position(pos)) return BigInt(1);
    DigitSet set = im->digit_set(im->block_of_position(pos));
    if (set.empty())
      throw std::domain_error("theta_moran_spec: empty digit set at position " + std::to_string(k));
    return set.size();
  };
  spec.contraction = [im](std::uint64_t k) { return BigRat(1, im->base_at(BigInt(k))); };
  return spec;
}

// log|I_n| / log beta_n per block; NaN where I_n is empty.
inline std::vector<double> gamma_sequence(const PatternParams& p, std::uint64_t N) {
  std::vector<double> out;
  out.reserve(N);
  for (std::uint64_t n = 1; n <= N; ++n) {
    BigInt size = p.digit_sets(n).size();
    if (size < 1) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      out.push_back(log_of(size) / log_of(p.beta(n)));
    }
  }
  return out;
}

// Finite evaluations of the two dimension-lemma ratios:
//   ratio1(n) = s_n log alpha_n / sum_{i<n} upsilon_i t_i log beta_i
//   ratio2(n) = s_n log alpha_n / (t_n log beta_n)
// NaN where the denominator vanishes.
struct DimensionConditionRow {
  std::uint64_t n;
  double ratio1;
  double ratio2;
};

inline std::vector<DimensionConditionRow> dimension_condition_table(const PatternParams& p,
                                                                    std::uint64_t N) {
  if (N < 2) throw std::domain_error("dimension_condition_table: N must be >= 2");
  std::vector<DimensionConditionRow> rows;
  rows.reserve(N);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  KahanSum denom1;  // sum upsilon_i t_i log beta_i over i < n
  for (std::uint64_t n = 1; n <= N; ++n) {
    BigInt sn = p.s(n), tn = p.t(n);
    double numer = (sn == 0) ? 0.0 : to_double(BigRat(sn)) * log_of(p.alpha(n));
    double d1 = denom1.value();
    double r1 = (d1 > 0) ? numer / d1 : (numer == 0.0 ? 0.0 : nan);
    double d2 = (tn == 0) ? 0.0 : to_double(BigRat(tn)) * log_of(p.beta(n));
    double r2 = (d2 > 0) ? numer / d2 : (numer == 0.0 ? 0.0 : nan);
    rows.push_back({n, r1, r2});
    if (tn != 0) denom1.add(to_double(BigRat(p.upsilon(n) * tn)) * log_of(p.beta(n)));
  }
  rows.erase(rows.begin());  // n = 1 has an empty history; table starts at n = 2
  return rows;
}

// Finite evaluations of the order-k digit-frequency conditions:
//   freq_k(n)  = t_n alpha_n^k / (s_n beta_n^k)   (limit 0 / limit > 0 split)
//   slot_k(n)  = alpha_n^k / s_n
//   share(n)   = sum upsilon_i s_i / sum upsilon_i (s_i + t_i)
// +infinity where only the denominator vanishes, NaN for 0/0.
struct NormalityConditionRow {
  std::uint64_t n;
  double freq_ratio;
  double slot_ratio;
  double alpha_share;
};

inline std::vector<NormalityConditionRow> normality_condition_table(const PatternParams& p,
                                                                    std::uint64_t k,
                                                                    std::uint64_t N) {
  if (N < 2) throw std::domain_error("normality_condition_table: N must be >= 2");
  std::vector<NormalityConditionRow> rows;
  rows.reserve(N);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  BigInt num_share = 0, den_share = 0;
  for (std::uint64_t n = 1; n <= N; ++n) {
    BigInt a = p.alpha(n), b = p.beta(n), sn = p.s(n), tn = p.t(n), un = p.upsilon(n);
    BigInt ak = boost::multiprecision::pow(a, static_cast<unsigned>(k));
    BigInt bk = boost::multiprecision::pow(b, static_cast<unsigned>(k));
    double freq;
    if (sn == 0) {
      freq = (tn == 0) ? nan : inf;
    } else {
      freq = to_double(BigRat(tn * ak, sn * bk));
    }
    double slot = (sn == 0) ? inf : to_double(BigRat(ak, sn));
    num_share += un * sn;
    den_share += un * (sn + tn);
    double share = (den_share == 0) ? nan : to_double(BigRat(num_share, den_share));
    rows.push_back({n, freq, slot, share});
  }
  return rows;
}

}  // namespace qcantor
