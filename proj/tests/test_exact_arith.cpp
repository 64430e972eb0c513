#include <doctest.h>

#include "dpss/exact_arith.hpp"
#include "dpss/random.hpp"

using namespace dpss;

namespace {

MultiWordInt random_int(RandomSource& src, unsigned max_bits) {
  const unsigned bits = 1 + static_cast<unsigned>(src.below(max_bits));
  MultiWordInt r;
  for (unsigned done = 0; done < bits; done += 64) {
    r <<= 64;
    r |= src.next_word();
  }
  return r >> (((bits + 63) / 64) * 64 - bits);
}

Rational random_positive(RandomSource& src, unsigned max_bits) {
  return Rational(random_int(src, max_bits) + 1, random_int(src, max_bits) + 1);
}

Rational pow2(std::int64_t k) { return mul_pow2(Rational(1), k); }

// Brute-force floor log2: walk powers of two from 2^0 by exact comparison.
std::int64_t floor_log2_oracle(const Rational& x) {
  std::int64_t f = 0;
  while (pow2(f) > x) --f;
  while (pow2(f + 1) <= x) ++f;
  return f;
}

std::int64_t ceil_log2_oracle(const Rational& x) {
  const std::int64_t f = floor_log2_oracle(x);
  return pow2(f) == x ? f : f + 1;
}

Rational abs_diff(const Rational& a, const Rational& b) { return a < b ? b - a : a - b; }

}  // namespace

TEST_CASE("hex and decimal round trips") {
  CHECK(to_hex(MultiWordInt(0)) == "0");
  CHECK(to_hex(MultiWordInt(31)) == "+1f");
  CHECK(to_hex(MultiWordInt(-160)) == "-a0");
  CHECK(from_hex("-a0") == -160);
  CHECK(from_hex("1F") == 31);
  CHECK_THROWS_AS(from_hex("xyz"), std::invalid_argument);
  CHECK_THROWS_AS(from_hex(""), std::invalid_argument);
  CHECK(magnitude_words(MultiWordInt(0)).empty());
  RandomSource src(5);
  for (int t = 0; t < 200; ++t) {
    MultiWordInt v = random_int(src, 900);
    if (t % 2) v = -v;
    CHECK(from_hex(to_hex(v)) == v);
    CHECK(from_decimal(to_decimal(v)) == v);
    const auto words = magnitude_words(v);
    CHECK(from_magnitude_words(v.sign(), words) == v);
  }
  const u128 big = (static_cast<u128>(0x0123456789abcdefULL) << 64) | 0xfedcba9876543210ULL;
  CHECK(to_u128(from_u128(big)) == big);
}

TEST_CASE("rational arithmetic") {
  CHECK(rat_add(Rational::parse("1/2"), Rational::parse("1/3")) == Rational::parse("5/6"));
  CHECK(rat_cmp(Rational::parse("2/4"), Rational::parse("1/2")) == std::strong_ordering::equal);
  CHECK(Rational::parse("-3/-6") == Rational::parse("1/2"));
  CHECK_THROWS_AS(Rational::parse("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(rat_div(Rational(1), Rational(0)), std::invalid_argument);
  CHECK(Rational::parse("6/4").reduced().to_string() == "3/2");
  CHECK(Rational::parse("7/8").to_double() == 0.875);
  RandomSource src(11);
  for (int t = 0; t < 100; ++t) {
    Rational a = random_positive(src, 200);
    Rational b = random_positive(src, 200);
    if (t % 3 == 0) a = -a;
    CHECK(rat_mul(a, a.reciprocal()) == Rational(1));
    CHECK((a + b) - b == a);
    CHECK((a * b) / b == a);
  }
}

TEST_CASE("int_pow") {
  CHECK(int_pow(MultiWordInt(2), 10) == 1024);
  CHECK(int_pow(MultiWordInt(3), 0) == 1);
  MultiWordInt oracle(1);
  for (int i = 0; i < 30; ++i) oracle = oracle * 10;
  CHECK(int_pow(MultiWordInt(10), 30) == oracle);
  CHECK(to_decimal(int_pow(MultiWordInt(10), 30)) == "1" + std::string(30, '0'));
  MultiWordInt seven(1);
  for (int i = 1; i <= 300; ++i) {
    seven *= 7;
    CHECK(int_pow(MultiWordInt(7), static_cast<std::uint64_t>(i)) == seven);
  }
}

TEST_CASE("floor and ceil log2") {
  CHECK(floor_log2(Rational::parse("5/2")) == 1);
  CHECK(ceil_log2(Rational::parse("5/2")) == 2);
  CHECK(floor_log2(Rational(8)) == 3);
  CHECK(ceil_log2(Rational(8)) == 3);
  CHECK(floor_log2(Rational::parse("1/8")) == -3);
  CHECK(ceil_log2(Rational::parse("3/16")) == -2);
  CHECK_THROWS_AS(floor_log2(Rational(0)), std::invalid_argument);
  CHECK_THROWS_AS(ceil_log2(Rational(-1)), std::invalid_argument);
  RandomSource src(17);
  for (int t = 0; t < 10000; ++t) {
    // parts up to 128 bits; every fifth sample is an exact power of two
    Rational x = random_positive(src, 128);
    if (t % 5 == 0) x = pow2(static_cast<std::int64_t>(src.below(200)) - 100);
    const auto f = floor_log2(x);
    const auto c = ceil_log2(x);
    REQUIRE(f == floor_log2_oracle(x));
    REQUIRE(c == ceil_log2_oracle(x));
    CHECK(pow2(f) <= x);
    CHECK(x < pow2(f + 1));
  }
}

TEST_CASE("dyadic rounding") {
  const auto third = dyadic_round(Rational::parse("1/3"), 4);
  CHECK((third.value() == Rational::parse("5/16") || third.value() == Rational::parse("6/16")));
  CHECK(dyadic_round(Rational::parse("1/2"), 1).value() == Rational::parse("1/2"));
  CHECK_THROWS_AS(dyadic_round(Rational(3), 4), std::invalid_argument);
  RandomSource src(23);
  for (int t = 0; t < 1000; ++t) {
    const Rational x = Rational(random_int(src, 100), (MultiWordInt(1) << 100) + 1);
    const int i = 1 + static_cast<int>(src.below(64));
    const auto r = dyadic_round(x, i);
    CHECK(r.precision_bits == i);
    CHECK(abs_diff(r.value(), x) <= pow2(-i));
    CHECK(abs_diff(r.value(), x) <= pow2(-i - 1));
  }
}
