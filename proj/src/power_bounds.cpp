#include "dpss/power_bounds.hpp"

#include <stdexcept>

namespace dpss {

namespace {

constexpr u128 kOne64 = static_cast<u128>(1) << 64;

// floor / ceil of a*b / 2^64 for a, b <= 2^64.
u128 mul_down(u128 a, u128 b) {
  if (a == kOne64) return b;
  if (b == kOne64) return a;
  return (a * b) >> 64;
}

u128 mul_up(u128 a, u128 b) {
  if (a == kOne64) return b;
  if (b == kOne64) return a;
  const u128 p = a * b;
  return (p >> 64) + ((p & (kOne64 - 1)) != 0 ? 1 : 0);
}

MultiWordInt ceil_div(const MultiWordInt& a, const MultiWordInt& b) {
  MultiWordInt q = a / b;
  if (q * b != a) ++q;
  return q;
}

// 192-bit value hi * 2^64 + lo.
struct U192 {
  u128 hi;
  std::uint64_t lo;
};

bool operator<=(const U192& a, const U192& b) { return a.hi != b.hi ? a.hi < b.hi : a.lo <= b.lo; }

U192 mul_64_128(std::uint64_t w, u128 y) {
  const u128 p0 = static_cast<u128>(w) * static_cast<std::uint64_t>(y);
  const u128 p1 = static_cast<u128>(w) * static_cast<std::uint64_t>(y >> 64);
  return U192{p1 + (p0 >> 64), static_cast<std::uint64_t>(p0)};
}

U192 add_128(U192 a, u128 y) {
  const std::uint64_t lo = a.lo + static_cast<std::uint64_t>(y);
  const u128 carry = lo < a.lo ? 1 : 0;
  return U192{a.hi + (y >> 64) + carry, lo};
}

// 1 or 0 when the first block of U settles U < x/y (0 < x < y), else -1.
// With w that block, w/2^64 <= U < (w+1)/2^64; both ends are compared with
// x/y by cross-multiplying into 192 bits.
int decide_fraction(LazyUniform& u, u128 x, u128 y) {
  const std::uint64_t w = u.word(0);
  const U192 target{x, 0};
  const U192 low = mul_64_128(w, y);
  if (target <= low) return 0;
  if (add_128(low, y) <= target) return 1;
  return -1;
}

}  // namespace

bool uniform_below_fraction(LazyUniform& u, u128 x, u128 y) {
  if (y == 0) throw std::invalid_argument("uniform_below_fraction: zero denominator");
  if (x == 0) return false;
  if (x >= y) return true;
  const int fast = decide_fraction(u, x, y);
  if (fast >= 0) return fast == 1;
  return uniform_below(u, Rational(from_u128(x), from_u128(y)));
}

bool uniform_below(LazyUniform& u, const Rational& p) {
  if (p.sign() <= 0) return false;
  if (p.num() >= p.den()) return true;
  if (bit_length(p.den()) <= 128) {
    const int fast = decide_fraction(u, to_u128(p.num()), to_u128(p.den()));
    if (fast >= 0) return fast == 1;
  }
  if (bit_length(p.den()) <= 64) {
    const auto b = static_cast<std::uint64_t>(p.den());
    auto r = static_cast<std::uint64_t>(p.num());
    for (std::size_t k = 0;; ++k) {
      const u128 scaled = static_cast<u128>(r) << 64;
      const auto d = static_cast<std::uint64_t>(scaled / b);
      r = static_cast<std::uint64_t>(scaled % b);
      const std::uint64_t w = u.word(k);
      if (w < d) return true;
      if (w > d) return false;
      if (r == 0) return false;
    }
  }
  MultiWordInt r = p.num();
  for (std::size_t k = 0;; ++k) {
    r <<= 64;
    const MultiWordInt d = r / p.den();
    r -= d * p.den();
    const std::uint64_t digit = static_cast<std::uint64_t>(d);
    const std::uint64_t w = u.word(k);
    if (w < digit) return true;
    if (w > digit) return false;
    if (r.is_zero()) return false;
  }
}

bool uniform_below_dyadic(LazyUniform& u, u128 num, unsigned shift) {
  if (shift > 128) throw std::invalid_argument("uniform_below_dyadic: shift > 128");
  if (num == 0) return false;
  if (shift == 0 || (shift < 128 && num >= (static_cast<u128>(1) << shift))) return true;
  const u128 x = shift == 128 ? num : num << (128 - shift);
  const auto hi = static_cast<std::uint64_t>(x >> 64);
  const auto lo = static_cast<std::uint64_t>(x);
  const std::uint64_t w0 = u.word(0);
  if (w0 != hi) return w0 < hi;
  if (lo == 0) return false;
  return u.word(1) < lo;
}

PowerLadder::PowerLadder(const Rational& q) : q_(q) {
  if (q.sign() < 0 || q > Rational(1)) throw std::invalid_argument("PowerLadder: q must lie in [0, 1]");
  zero_ = q.is_zero();
  one_ = q == Rational(1);
  const MultiWordInt scaled = q.num() << 64;
  const MultiWordInt lo = scaled / q.den();
  const MultiWordInt hi = ceil_div(scaled, q.den());
  squares_.push_back(Fixed64{to_u128(lo), to_u128(hi)});
}

PowerLadder::Fixed64 PowerLadder::bounds64(std::uint64_t k) {
  const std::size_t slot = k % memo_k_.size();
  if (memo_k_[slot] == k && k != 0) return memo_[slot];
  const std::uint64_t key = k;
  const std::size_t prev = (k - 1) % memo_k_.size();
  if (memo_k_[prev] == k - 1 && k > 1) {  // one step from q^(k-1)
    const Fixed64 r{mul_down(memo_[prev].lo, squares_[0].lo), mul_up(memo_[prev].hi, squares_[0].hi)};
    memo_k_[slot] = key;
    memo_[slot] = r;
    return r;
  }
  Fixed64 r{kOne64, kOne64};
  for (std::size_t t = 0; k != 0; ++t, k >>= 1) {
    if (t == squares_.size()) {
      const Fixed64& s = squares_.back();
      squares_.push_back(Fixed64{mul_down(s.lo, s.lo), mul_up(s.hi, s.hi)});
    }
    if (k & 1u) {
      r.lo = mul_down(r.lo, squares_[t].lo);
      r.hi = mul_up(r.hi, squares_[t].hi);
    }
  }
  memo_k_[slot] = key;
  memo_[slot] = r;
  return r;
}

void PowerLadder::bounds(std::uint64_t k, unsigned bits, MultiWordInt& lo, MultiWordInt& hi) const {
  const MultiWordInt scaled = q_.num() << bits;
  MultiWordInt blo = scaled / q_.den();
  MultiWordInt bhi = ceil_div(scaled, q_.den());
  const MultiWordInt one = MultiWordInt(1) << bits;
  const MultiWordInt mask = one - 1;
  lo = one;
  hi = one;
  while (k != 0) {
    if (k & 1u) {
      lo = (lo * blo) >> bits;
      MultiWordInt p = hi * bhi;
      const bool frac = !(p & mask).is_zero();
      hi = (p >> bits) + (frac ? 1 : 0);
    }
    k >>= 1;
    if (k != 0) {
      blo = (blo * blo) >> bits;
      MultiWordInt p = bhi * bhi;
      const bool frac = !(p & mask).is_zero();
      bhi = (p >> bits) + (frac ? 1 : 0);
    }
  }
}

bool PowerLadder::uniform_below(LazyUniform& u, std::uint64_t k) {
  if (k == 0 || one_) return true;
  if (zero_) return false;
  const Fixed64 b = bounds64(k);
  const u128 w = u.word(0);
  if (w + 1 <= b.lo) return true;
  if (w >= b.hi) return false;
  MultiWordInt lo, hi;
  for (unsigned bits = 128;; bits *= 2) {
    bounds(k, bits, lo, hi);
    MultiWordInt prefix;
    for (unsigned j = 0; j < bits / 64; ++j) {
      prefix <<= 64;
      prefix |= u.word(j);
    }
    if (prefix + 1 <= lo) return true;
    if (prefix >= hi) return false;
  }
}

}  // namespace dpss
