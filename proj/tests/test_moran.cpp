#include <catch2/catch_amalgamated.hpp>

#include "qcantor/moran.hpp"
#include "qcantor/rng.hpp"

using namespace qcantor;

TEST_CASE("moran spec validation") {
  CHECK(validate_moran_spec(MoranSpec::constant(BigInt(2), BigRat(1, 4)), 50).empty());

  auto bad = validate_moran_spec(MoranSpec::constant(BigInt(3), BigRat(1, 2)), 10);
  REQUIRE_FALSE(bad.empty());
  CHECK(bad[0].what == "n_1*c_1 > delta");

  MoranSpec weird{BigRat(2), [](std::uint64_t) { return BigInt(1); },
                  [](std::uint64_t) { return BigRat(1, 2); }, "weird"};
  auto v = validate_moran_spec(weird, 3);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].what == "delta outside (0,1]");
}

TEST_CASE("dimension bounds closed forms") {
  auto rep = fww_bounds(MoranSpec::constant(BigInt(2), BigRat(1, 4)), 10000);
  // lower(20) = 20*log2 / (21*log4 - log2) = 20/41
  CHECK_THAT(rep.lower[19], Catch::Matchers::WithinAbs(20.0 / 41.0, 1e-9));
  for (std::uint64_t k = 1; k <= 10000; ++k)
    CHECK_THAT(rep.upper[k - 1], Catch::Matchers::WithinAbs(0.5, 1e-12));

  auto ones = fww_bounds(MoranSpec::constant(BigInt(1), BigRat(1, 3)), 50);
  for (std::uint64_t k = 1; k <= 50; ++k) {
    CHECK(ones.lower[k - 1] == 0.0);
    CHECK(ones.upper[k - 1] == 0.0);
  }
}

TEST_CASE("self-similar lower bound approaches log m / log b") {
  auto rep = fww_bounds(MoranSpec::constant(BigInt(2), BigRat(1, 4)), 100);
  CHECK(std::abs(rep.lower[99] - 0.5) < 0.01);
  // running tail minimum reported over the tail half
  CHECK(rep.lower_tail_min <= rep.lower[99]);
  CHECK(rep.lower_tail_min > 0.49);
}

TEST_CASE("lower bound never exceeds upper bound when both defined") {
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    std::uint64_t nv = 1 + rng.below(6);
    BigInt d(rng.below(20) + nv + 1);  // keeps n*c <= 1
    auto rep = fww_bounds(MoranSpec::constant(BigInt(nv), BigRat(1, d)), 200);
    for (std::uint64_t k = 1; k <= 200; ++k) {
      if (rep.defined_lower(k) && rep.defined_upper(k))
        CHECK(rep.lower[k - 1] <= rep.upper[k - 1] + 1e-15);
    }
  }
}

TEST_CASE("degenerate denominators are reported undefined") {
  // n_2 = 8 with c = 1/2 violates the standing hypotheses and drives the
  // lower-bound denominator negative at k = 1.
  MoranSpec spec{BigRat(1), [](std::uint64_t k) { return BigInt(k == 2 ? 8 : 1); },
                 [](std::uint64_t) { return BigRat(1, 2); }, "invalid"};
  CHECK_FALSE(validate_moran_spec(spec, 5).empty());
  auto rep = fww_bounds(spec, 3);
  CHECK_FALSE(rep.defined_lower(1));
  CHECK(std::isnan(rep.lower[0]));
}
