#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace dpss {

/// Signed multi-word integer. Values up to 512 bits live inline; larger ones
/// (O(n)-word numerators of p*, exact powers) spill to the heap.
using MultiWordInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<
    512, 0, boost::multiprecision::signed_magnitude, boost::multiprecision::unchecked,
    std::allocator<boost::multiprecision::limb_type>>,
    boost::multiprecision::et_off>;

using u128 = unsigned __int128;

/// floor(log2 |x|) + 1, and 0 for zero.
std::uint64_t bit_length(const MultiWordInt& x);

/// Little-endian magnitude words; empty for zero.
std::vector<std::uint64_t> magnitude_words(const MultiWordInt& x);
MultiWordInt from_magnitude_words(int sign, std::span<const std::uint64_t> words);

MultiWordInt from_u128(u128 v);
/// Requires 0 <= x < 2^128.
u128 to_u128(const MultiWordInt& x);

/// Lowercase hex with an explicit sign prefix: "+1f", "-a0", and "0" for zero.
std::string to_hex(const MultiWordInt& x);
/// Accepts the to_hex format (a missing '+' is tolerated). Throws
/// std::invalid_argument on malformed input.
MultiWordInt from_hex(std::string_view text);

std::string to_decimal(const MultiWordInt& x);
MultiWordInt from_decimal(std::string_view text);

/// Exact b^k by repeated squaring.
MultiWordInt int_pow(const MultiWordInt& b, std::uint64_t k);

/// Exact rational number num/den with den > 0. Not kept in lowest terms;
/// equality and ordering compare by cross-multiplication.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t v) : num_(v), den_(1) {}  // NOLINT(google-explicit-constructor)
  Rational(MultiWordInt num, MultiWordInt den);   // throws std::invalid_argument if den == 0
  static Rational from_int(const MultiWordInt& v) { return Rational(v, MultiWordInt(1)); }
  static Rational from_u64(std::uint64_t v) { return from_int(MultiWordInt(v)); }

  /// Parses "p/q" or a plain (optionally signed) decimal integer.
  static Rational parse(std::string_view text);

  const MultiWordInt& num() const { return num_; }
  const MultiWordInt& den() const { return den_; }

  int sign() const { return num_.sign(); }
  bool is_zero() const { return num_.is_zero(); }

  Rational reduced() const;
  Rational reciprocal() const;  // throws std::invalid_argument on zero

  /// "p/q" as stored, or "p" when the denominator is 1.
  std::string to_string() const;
  double to_double() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a) { return Rational(-a.num_, a.den_, 0); }

  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ * b.den_ == b.num_ * a.den_;
  }

 private:
  Rational(MultiWordInt num, MultiWordInt den, int) : num_(std::move(num)), den_(std::move(den)) {}

  MultiWordInt num_;
  MultiWordInt den_;
};

Rational rat_add(const Rational& a, const Rational& b);
Rational rat_sub(const Rational& a, const Rational& b);
Rational rat_mul(const Rational& a, const Rational& b);
Rational rat_div(const Rational& a, const Rational& b);
std::strong_ordering rat_cmp(const Rational& a, const Rational& b);

/// a * 2^k for any integer k.
Rational mul_pow2(const Rational& a, std::int64_t k);
Rational min(const Rational& a, const Rational& b);

/// Exact floor / ceiling of log2(x) for x > 0: a candidate from the bit
/// lengths of numerator and denominator, settled by one shifted comparison.
/// Throws std::invalid_argument when x <= 0.
std::int64_t floor_log2(const Rational& x);
std::int64_t ceil_log2(const Rational& x);

/// An i-bit approximation: value() = mantissa / 2^precision_bits.
struct DyadicApprox {
  MultiWordInt mantissa;
  int precision_bits = 0;

  Rational value() const;
};

/// Round-to-nearest onto the grid 2^-i; the error is at most 2^-(i+1).
/// Requires x in [0, 2].
DyadicApprox dyadic_round(const Rational& x, int i);

}  // namespace dpss
