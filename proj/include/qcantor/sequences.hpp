#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qcantor/bigint.hpp"

namespace qcantor {

// A strictly increasing sequence of non-negative integers, addressed by
// 0-based rank. Target digit sets for the digit-range constructions.
class IntegerSequence {
 public:
  static IntegerSequence squares() {
    return IntegerSequence("squares", [](std::uint64_t j) { return BigInt(j) * BigInt(j); }, {});
  }
  static IntegerSequence naturals() {
    return IntegerSequence("naturals", [](std::uint64_t j) { return BigInt(j); }, {});
  }
  static IntegerSequence evens() {
    return IntegerSequence("evens", [](std::uint64_t j) { return BigInt(2) * j; }, {});
  }
  static IntegerSequence from_list(std::vector<BigInt> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 0) throw std::domain_error("IntegerSequence: negative member");
      if (i && values[i] <= values[i - 1])
        throw std::domain_error("IntegerSequence: list must be strictly increasing");
    }
    if (values.empty()) throw std::domain_error("IntegerSequence: empty list");
    auto vals = std::make_shared<std::vector<BigInt>>(std::move(values));
    std::string nm = "list:";
    for (std::size_t i = 0; i < vals->size(); ++i) {
      if (i) nm += ',';
      nm += (*vals)[i].str();
    }
    return IntegerSequence(std::move(nm),
                           [vals](std::uint64_t j) {
                             if (j >= vals->size())
                               throw std::out_of_range("IntegerSequence: rank past end of list");
                             return (*vals)[j];
                           },
                           vals->size());
  }

  BigInt kth(std::uint64_t j) const { return fn_(j); }
  std::optional<std::uint64_t> size() const { return size_; }
  const std::string& name() const { return name_; }
  BigInt min_value() const { return fn_(0); }

  // Number of members <= bound.
  std::uint64_t count_upto(const BigInt& bound) const {
    if (bound < fn_(0)) return 0;
    if (size_ && fn_(*size_ - 1) <= bound) return *size_;
    // Doubling search for the first rank past the bound, then bisect.
    std::uint64_t hi = 1;
    while (!past(hi, bound)) hi *= 2;
    std::uint64_t lo = hi / 2;  // not past
    while (lo + 1 < hi) {
      std::uint64_t mid = lo + (hi - lo) / 2;
      (past(mid, bound) ? hi : lo) = mid;
    }
    return hi;  // ranks 0..hi-1 are <= bound
  }

 private:
  IntegerSequence(std::string name, std::function<BigInt(std::uint64_t)> fn,
                  std::optional<std::uint64_t> size)
      : name_(std::move(name)), fn_(std::move(fn)), size_(size) {}

  bool past(std::uint64_t rank, const BigInt& bound) const {
    if (size_ && rank >= *size_) return true;
    return fn_(rank) > bound;
  }

  std::string name_;
  std::function<BigInt(std::uint64_t)> fn_;
  std::optional<std::uint64_t> size_;
};

}  // namespace qcantor
