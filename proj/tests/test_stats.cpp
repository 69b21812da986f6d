#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "qcantor/rng.hpp"
#include "qcantor/sequences.hpp"
#include "qcantor/stats.hpp"

using namespace qcantor;

namespace {

DigitStream stream_of(std::initializer_list<long long> digits, BasicSequence base) {
  std::vector<BigInt> v;
  for (long long d : digits) v.emplace_back(d);
  return DigitStream::from_digits(std::move(v), std::move(base));
}

DigitStream alternating01(std::uint64_t) {
  return DigitStream(BasicSequence::constant(2), "alt",
                     [](std::uint64_t n) { return BigInt((n + 1) % 2); });
}

std::vector<BigRat> rational_points(Rng& rng, std::size_t count, std::uint64_t maxden) {
  std::vector<BigRat> pts;
  for (std::size_t i = 0; i < count; ++i) {
    BigInt d(1 + rng.below(maxden));
    pts.emplace_back(rng.below_big(d), d);
  }
  return pts;
}

}  // namespace

TEST_CASE("block counting matches the naive oracle") {
  BasicSequence q4 = BasicSequence::constant(4);
  DigitStream s = stream_of({1, 2, 1, 2}, q4);
  CHECK(count_block(s, Block::of({1, 2}), 4) == 2);
  CHECK(count_block(s, Block::of({2, 1}), 4) == 1);
  CHECK(count_block(s, Block::of({0}), 0) == 0);

  // overlapping occurrences count
  DigitStream rep = stream_of({3, 3, 3, 3}, q4);
  CHECK(count_block(rep, Block::of({3, 3}), 4) == 3);

  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<BigInt> digits;
    for (int i = 0; i < 400; ++i) digits.emplace_back(rng.below(3));
    DigitStream ds = DigitStream::from_digits(digits, BasicSequence::constant(3));
    std::vector<BigInt> block;
    std::size_t k = 1 + rng.below(4);
    for (std::size_t i = 0; i < k; ++i) block.emplace_back(rng.below(3));
    std::uint64_t n = rng.below(400) + 1;
    BlockCountAccumulator acc{Block(block)};
    ds.for_each(n, [&](std::uint64_t, const BigInt& d) { acc.push(d); });
    CHECK(acc.count() == oracles::count_block_naive(digits, block, n));
  }
}

TEST_CASE("normality index") {
  DigitStream alt = alternating01(0);
  CHECK(normality_index(alt, Block::of({0}), 100) == BigRat(1));
  DigitStream zeros(BasicSequence::constant(2), "zeros", [](std::uint64_t) { return BigInt(0); });
  CHECK(normality_index(zeros, Block::of({1}), 50) == BigRat(0));
  // explicit list shorter than n + k - 1: the sum truncates to defined terms
  BasicSequence q234 = BasicSequence::explicit_list({BigInt(2), BigInt(3), BigInt(4)});
  DigitStream s = stream_of({1, 2, 3}, q234);
  CHECK(normality_index(s, Block::of({2, 3}), 3) == BigRat(4));
  CHECK_THROWS_AS(normality_index(s, Block::of({2, 3}), 1), std::domain_error);
}

TEST_CASE("ratio index") {
  DigitStream alt = alternating01(0);
  auto r = ratio_index(alt, Block::of({0}), Block::of({1}), 100);
  REQUIRE(r.has_value());
  CHECK(*r == BigRat(1));
  auto same = ratio_index(alt, Block::of({0, 1}), Block::of({0, 1}), 60);
  REQUIRE(same.has_value());
  CHECK(*same == BigRat(1));
  DigitStream zeros(BasicSequence::constant(2), "zeros", [](std::uint64_t) { return BigInt(0); });
  CHECK(!ratio_index(zeros, Block::of({0}), Block::of({1}), 40).has_value());
  CHECK_THROWS_AS(ratio_index(alt, Block::of({0}), Block::of({1, 1}), 10), std::domain_error);
}

TEST_CASE("star discrepancy formula on pinned samples") {
  CHECK(star_discrepancy(std::vector<BigRat>{BigRat(1, 2)}) == BigRat(1, 2));
  CHECK(star_discrepancy(std::vector<BigRat>{BigRat(1, 4), BigRat(3, 4)}) == BigRat(1, 4));
  CHECK(star_discrepancy(std::vector<BigRat>{BigRat(0)}) == BigRat(1));
  CHECK_THROWS_AS(star_discrepancy(std::vector<BigRat>{}), std::domain_error);
  CHECK_THROWS_AS(star_discrepancy(std::vector<BigRat>{BigRat(3, 2)}), std::domain_error);
}

TEST_CASE("star discrepancy equals the brute-force endpoint maximum") {
  Rng rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 1 + rng.below(60);
    auto pts = rational_points(rng, n, 40);  // small denominators force ties
    CHECK(star_discrepancy(pts) == oracles::star_discrepancy_brute(pts));
  }
}

TEST_CASE("star discrepancy is permutation invariant and >= 1/(2N)") {
  Rng rng(43);
  auto pts = rational_points(rng, 30, 1000);
  BigRat d = star_discrepancy(pts);
  std::vector<BigRat> shuffled = pts;
  for (std::size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  CHECK(star_discrepancy(shuffled) == d);
  CHECK(d >= BigRat(1, 60));
  CHECK(d <= 1);

  auto rep = discrepancy_report(pts);
  CHECK(rep.sample_size == 30);
  CHECK(rep.d_star == d);
}

TEST_CASE("one-point samples have D* = max(x, 1-x)") {
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    BigInt d(1 + rng.below(500));
    BigRat x(rng.below_big(d), d);
    CHECK(star_discrepancy(std::vector<BigRat>{x}) == std::max(x, BigRat(1) - x));
  }
}

TEST_CASE("perturbation inequality report") {
  std::vector<BigRat> x{BigRat(1, 10), BigRat(9, 10)};
  auto same = disc_perturbation_check(x, x, BigRat(0));
  CHECK(same.holds);
  CHECK(same.difference == 0);
  CHECK(same.nbar == 0);

  std::vector<BigRat> y{BigRat(3, 20), BigRat(19, 20)};
  auto shifted = disc_perturbation_check(x, y, BigRat(1, 20));
  CHECK(shifted.holds);
  CHECK(shifted.nbar == 0);
  CHECK(shifted.bound == BigRat(1, 10));
  CHECK(shifted.difference <= BigRat(1, 10));

  auto single = disc_perturbation_check({BigRat(1, 2)}, {BigRat(0)}, BigRat(0));
  CHECK(single.holds);
  CHECK(single.nbar == 1);
  CHECK(single.bound == BigRat(1));

  CHECK_THROWS_AS(disc_perturbation_check(x, {BigRat(0)}, BigRat(0)), std::domain_error);
}

TEST_CASE("perturbation inequality holds on random pairs") {
  Rng rng(45);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t n = 1 + rng.below(80);
    auto x = rational_points(rng, n, 300);
    std::vector<BigRat> y = x;
    for (auto& v : y) {
      BigInt d(1 + rng.below(300));
      BigRat bump(rng.below_big(2 * d + 1) - d, 50 * d);
      v = v + bump;
      if (v < 0) v = 0;
      if (v >= 1) v = BigRat(299, 300);
    }
    BigRat eps(rng.below(5), 20);
    CHECK(disc_perturbation_check(x, y, eps).holds);
  }
}

TEST_CASE("distinct digit counts and digit sets") {
  BasicSequence q = BasicSequence::constant(10);
  CHECK(distinct_digits(stream_of({0, 1, 2, 3}, q), 4) == 4);
  CHECK(distinct_digits(stream_of({5, 5, 5}, q), 3) == 1);
  CHECK(distinct_digits(stream_of({1, 2, 1, 3}, q), 4) == 3);

  auto w = digit_set(stream_of({1, 2, 1, 3}, q), 4);
  CHECK(w.members == std::vector<BigInt>{BigInt(1), BigInt(2), BigInt(3)});
  CHECK(digit_set(stream_of({0, 0}, q), 2).members == std::vector<BigInt>{BigInt(0)});
  CHECK(digit_set(stream_of({7}, q), 0).members.empty());
}

TEST_CASE("density estimates") {
  std::vector<BigInt> evens;
  for (int v = 0; v < 100; v += 2) evens.emplace_back(v);
  auto ev = IntegerSetWindow::from_values(evens, BigInt(100));
  CHECK(density_estimate(ev, BigInt(100)) == BigRat(1, 2));

  auto zero = IntegerSetWindow::from_values({BigInt(0)}, BigInt(10));
  CHECK(density_estimate(zero, BigInt(10)) == BigRat(1, 10));

  std::vector<BigInt> squares;
  for (BigInt v = 0; v * v < 1000000; ++v) squares.push_back(v * v);
  auto sq = IntegerSetWindow::from_values(squares, BigInt(1000000));
  CHECK(density_estimate(sq, BigInt(1000000)) == BigRat(1000, 1000000));
}

TEST_CASE("mass dimension estimates") {
  std::vector<BigInt> nats;
  for (int v = 0; v < 500000; ++v) nats.emplace_back(v);
  auto all = IntegerSetWindow::from_values(std::move(nats), BigInt(1000000));
  CHECK_THAT(mass_dimension_estimate(all, BigInt(1000000)),
             Catch::Matchers::WithinAbs(0.94983, 1e-4));

  auto zero = IntegerSetWindow::from_values({BigInt(0)}, BigInt(10));
  CHECK(mass_dimension_estimate(zero, BigInt(1000000)) == 0.0);

  std::vector<BigInt> squares;
  for (BigInt v = 0; v * v < 500000; ++v) squares.push_back(v * v);
  auto sq = IntegerSetWindow::from_values(squares, BigInt(1000000));
  CHECK(half_window_count(sq, BigInt(1000000)) == 708);
  CHECK_THAT(mass_dimension_estimate(sq, BigInt(1000000)),
             Catch::Matchers::WithinAbs(0.475, 1e-3));

  auto empty = IntegerSetWindow::from_values({BigInt(900)}, BigInt(1000));
  CHECK(mass_dimension_estimate(empty, BigInt(100)) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("mass dimension of the naturals rises toward 1 through checkpoints") {
  std::vector<BigInt> nats;
  for (int v = 0; v < 500000; ++v) nats.emplace_back(v);
  auto all = IntegerSetWindow::from_values(std::move(nats), BigInt(1000000));
  std::vector<BigInt> cps{BigInt(100), BigInt(1000), BigInt(10000), BigInt(100000), BigInt(1000000)};
  auto rows = mass_dimension_table(all, cps);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].estimate > rows[i - 1].estimate);
  CHECK(rows.back().estimate < 1.0);
  CHECK(rows.back().running_max == rows.back().estimate);
}

TEST_CASE("normalized digit points and orbit points") {
  BasicSequence succ = BasicSequence::successor();
  DigitStream s = DigitStream::from_rational(BigRat(5, 6), succ);
  auto pts = normalized_digit_points(s, 3);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0] == BigRat(1, 2));
  CHECK(pts[1] == BigRat(2, 3));
  CHECK(pts[2] == BigRat(0));

  auto orb = orbit_points(BigRat(5, 6), succ, 3);
  CHECK(orb[0] == BigRat(5, 6));
  CHECK(orb[1] == BigRat(2, 3));
  CHECK(orb[2] == BigRat(0));
}
