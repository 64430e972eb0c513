#include <doctest.h>

#include "dpss/errors.hpp"
#include "dpss/lookup_table.hpp"
#include "dpss/verification.hpp"

using namespace dpss;

namespace {

constexpr std::uint64_t kBig = std::uint64_t{1} << 40;

// Pr(r) from the slot probabilities as exact rationals.
Rational exact_pr(const std::vector<unsigned>& c, unsigned m, std::uint64_t r) {
  Rational pr(1);
  const Rational m2(static_cast<std::int64_t>(m * m));
  for (std::size_t j = 1; j <= c.size(); ++j) {
    const Rational p = min(Rational(1), mul_pow2(Rational(static_cast<std::int64_t>(c[j - 1])), j + 1) / m2);
    pr = pr * (((r >> (j - 1)) & 1u) ? p : Rational(1) - p);
  }
  return pr;
}

std::vector<unsigned> digits(std::uint64_t row, unsigned k, unsigned m) {
  std::vector<unsigned> c;
  for (unsigned j = 0; j < k; ++j, row /= (m + 1)) c.push_back(static_cast<unsigned>(row % (m + 1)));
  return c;
}

}  // namespace

TEST_CASE("small tables") {
  const auto t = LookupTable::build(2, 2, kBig);
  CHECK(t.rows() == 9);
  CHECK(t.cells_per_row() == 16);
  const std::uint8_t zero[] = {0, 0};
  for (std::uint64_t i = 0; i < 16; ++i) CHECK(t.cell(t.row_index(zero), i) == 0);
  const std::uint8_t c12[] = {1, 2};
  for (std::uint64_t i = 0; i < 16; ++i) CHECK(t.cell(t.row_index(c12), i) == 3);
  const auto t1 = LookupTable::build(1, 2, kBig);
  const std::uint8_t one[] = {1};
  for (std::uint64_t i = 0; i < 4; ++i) CHECK(t1.cell(t1.row_index(one), i) == 1);
  // m = 3 leaves room for fractional slot probabilities.
  const auto t3 = LookupTable::build(2, 3, kBig);
  const std::uint8_t c11[] = {1, 1};  // p = (4/9, 8/9)
  const std::uint64_t row = t3.row_index(c11);
  CHECK(t3.multiplicity(row, 0) == 5 * 1);
  CHECK(t3.multiplicity(row, 1) == 4 * 1);
  CHECK(t3.multiplicity(row, 2) == 5 * 8);
  CHECK(t3.multiplicity(row, 3) == 4 * 8);
  CHECK(t3.verify_row(row));
}

TEST_CASE("every row holds exact multiplicities") {
  for (unsigned m = 2; m <= 5; ++m) {
    for (unsigned k = 1; k <= 3; ++k) {
      if (LookupTable::words_needed(k, m) > (1u << 22)) continue;
      const auto t = LookupTable::build(k, m, kBig);
      const Rational cells(static_cast<std::int64_t>(t.cells_per_row()));
      for (std::uint64_t row = 0; row < t.rows(); ++row) {
        REQUIRE(t.verify_row(row));
        const auto c = digits(row, k, m);
        for (std::uint64_t r = 0; r < (1u << k); ++r) {
          CHECK(Rational(static_cast<std::int64_t>(t.multiplicity(row, r))) == exact_pr(c, m, r) * cells);
        }
      }
    }
  }
}

TEST_CASE("incremental fill equals one-shot build") {
  const auto whole = LookupTable::build(3, 3, kBig);
  LookupTable part(3, 3, kBig);
  int steps = 0;
  while (!part.fill(777)) ++steps;
  CHECK(steps > 10);
  for (std::uint64_t row = 0; row < whole.rows(); ++row) {
    for (std::uint64_t i = 0; i < whole.cells_per_row(); ++i) REQUIRE(part.cell(row, i) == whole.cell(row, i));
  }
}

TEST_CASE("sampling frequencies and impossible slots") {
  const auto t = LookupTable::build(2, 2, kBig);
  const std::uint8_t c11[] = {1, 1};  // p = (1, 1)
  RandomSource src(3);
  for (int i = 0; i < 1000; ++i) CHECK(t.sample(c11, src) == 3);

  const auto t3 = LookupTable::build(3, 4, kBig);
  const std::uint8_t cfg[] = {1, 0, 1};  // p = (4/16, 0, 16/16)
  const std::vector<unsigned> c{1, 0, 1};
  std::vector<Rational> pmf;
  for (std::uint64_t r = 0; r < 8; ++r) pmf.push_back(exact_pr(c, 4, r));
  const auto report = pmf_test([&](RandomSource& s) { return t3.sample(cfg, s) + 1; }, pmf, kDefaultTrials,
                               kDefaultZMax, 9);
  CHECK(all_pass(report));

  const std::uint8_t cfg2[] = {1, 1, 0};  // p = (4/16, 8/16, 0)
  const std::vector<unsigned> c2{1, 1, 0};
  pmf.clear();
  for (std::uint64_t r = 0; r < 8; ++r) pmf.push_back(exact_pr(c2, 4, r));
  CHECK(all_pass(pmf_test([&](RandomSource& s) { return t3.sample(cfg2, s) + 1; }, pmf, kDefaultTrials,
                          kDefaultZMax, 10)));
  for (int i = 0; i < 10000; ++i) CHECK((t3.sample(cfg2, src) & 4u) == 0);
}

TEST_CASE("budget and argument checks") {
  CHECK(LookupTable::words_needed(3, 4) == (125ull * 4096 + 20) / 21);
  CHECK(LookupTable::feasible_slots(4, 4, 40000) == 3);
  CHECK(LookupTable::feasible_slots(3, 4, 256) == 2);
  CHECK(LookupTable::feasible_slots(5, 5, 400000) == 3);
  CHECK(LookupTable::feasible_slots(4, 4, 1) == 0);
  CHECK_THROWS_AS(LookupTable(4, 4, 40000), TableTooLarge);
  CHECK_THROWS_AS(LookupTable(0, 4, kBig), std::invalid_argument);
  CHECK_THROWS_AS(LookupTable(2, 1, kBig), std::invalid_argument);
  const auto t = LookupTable::build(2, 2, kBig);
  const std::uint8_t bad[] = {3, 0};
  const std::uint8_t shorter[] = {1};
  RandomSource src(1);
  CHECK_THROWS_AS(t.sample(bad, src), std::invalid_argument);
  CHECK_THROWS_AS(t.sample(shorter, src), std::invalid_argument);
  CHECK(LookupTable().sample({}, src) == 0);
}
