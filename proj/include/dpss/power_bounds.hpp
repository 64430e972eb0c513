#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dpss/exact_arith.hpp"
#include "dpss/random.hpp"

namespace dpss {

/// U < p for a lazily revealed uniform U, decided exactly by comparing U's
/// 64-bit blocks with the base-2^64 digits of p = a/b. Expected O(1) blocks.
bool uniform_below(LazyUniform& u, const Rational& p);

/// U < x / y for y > 0. The first block of U settles it unless U lies within
/// 2^-64 of x/y; then the digit comparison above continues on the same U.
bool uniform_below_fraction(LazyUniform& u, u128 x, u128 y);

/// U < num / 2^shift with shift <= 128; at most two blocks of U are read.
bool uniform_below_dyadic(LazyUniform& u, u128 num, unsigned shift);

/// Brackets q^k for a fixed q in [0, 1] and decides U < q^k exactly.
///
/// The first attempt uses 64-bit fixed point with directed rounding and a
/// cache of q^(2^t); when the bracket is too wide to separate U, the
/// precision doubles (multi-word, no cache) until the comparison settles.
/// Every answer is certain, so Ber(q^k) built on this is exact.
class PowerLadder {
 public:
  explicit PowerLadder(const Rational& q);

  const Rational& base() const { return q_; }

  bool uniform_below(LazyUniform& u, std::uint64_t k);

  /// Rigorous bracket [lo, hi] * 2^-bits of q^k (exposed for tests).
  void bounds(std::uint64_t k, unsigned bits, MultiWordInt& lo, MultiWordInt& hi) const;

 private:
  struct Fixed64 {
    u128 lo;  // value * 2^64 rounded down, <= 2^64
    u128 hi;  // value * 2^64 rounded up, <= 2^64
  };

  Fixed64 bounds64(std::uint64_t k);

  Rational q_;
  bool zero_ = false;
  bool one_ = false;
  std::vector<Fixed64> squares_;  // squares_[t] brackets q^(2^t)
  std::array<std::uint64_t, 16> memo_k_{};
  std::array<Fixed64, 16> memo_{};
};

}  // namespace dpss
