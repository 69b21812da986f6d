#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include "qcantor/bigint.hpp"

namespace qcantor {

// Seeded deterministic generator. mt19937_64 gives a portable word stream;
// the uniform mappings below are ours, so outputs are identical across
// platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t word() { return eng_(); }

  // Uniform in [0, bound), bound >= 1. Rejection sampling, bias-free.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::domain_error("Rng::below: zero bound");
    if (bound == 1) return 0;
    std::uint64_t span = UINT64_MAX / bound;
    std::uint64_t cap = span * bound;
    std::uint64_t r;
    do {
      r = eng_();
    } while (r >= cap);
    return r / span;
  }

  // Uniform in [0, bound) for arbitrary-precision bounds.
  BigInt below_big(const BigInt& bound) {
    if (bound <= 0) throw std::domain_error("Rng::below_big: bound must be positive");
    if (bound <= UINT64_MAX) return BigInt(below(bound.convert_to<std::uint64_t>()));
    std::uint64_t bits = bit_length(bound);
    std::uint64_t words = (bits + 63) / 64;
    std::uint64_t top_bits = bits - (words - 1) * 64;
    std::uint64_t top_mask = (top_bits == 64) ? UINT64_MAX : ((std::uint64_t{1} << top_bits) - 1);
    while (true) {
      BigInt v = 0;
      for (std::uint64_t w = 0; w < words; ++w) {
        std::uint64_t x = eng_();
        if (w == 0) x &= top_mask;
        v <<= (w == 0 ? top_bits : 64);
        v |= x;
      }
      if (v < bound) return v;
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace qcantor
