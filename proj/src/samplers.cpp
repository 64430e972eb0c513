#include "dpss/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpss/errors.hpp"

namespace dpss {

namespace {

void check_probability(const Rational& p) {
  if (p.sign() < 0 || p > Rational(1)) throw std::invalid_argument("probability outside [0, 1]: " + p.to_string());
}

void check_open_probability(const Rational& p) {
  if (p.sign() <= 0 || p >= Rational(1)) throw std::invalid_argument("p must lie in (0, 1): " + p.to_string());
}

void check_pstar_args(const Rational& q, std::uint64_t n) {
  if (n == 0) throw PreconditionViolation("p*: n must be positive");
  if (q.sign() <= 0) throw PreconditionViolation("p*: q must be positive");
  if (q.num() * n > q.den()) throw PreconditionViolation("p*: n*q must be at most 1");
}

// The first `bits` bits of U as an integer.
MultiWordInt uniform_prefix(LazyUniform& u, unsigned bits) {
  const unsigned words = (bits + 63) / 64;
  MultiWordInt r;
  for (unsigned k = 0; k < words; ++k) {
    r <<= 64;
    r |= u.word(k);
  }
  return r >> (words * 64 - bits);
}

bool ber_approx_from(LazyUniform& u, const ApproximableProbability& ap) {
  for (int i = 2; i <= kApproxPrecisionCap; i *= 2) {
    const DyadicApprox a = ap.approx(i);
    if (a.precision_bits != i) throw InvalidState("ber_approx: approximation at the wrong precision");
    // a.mantissa / 2^i is within 2^-i of p, and U lies in [prefix, prefix + 1) / 2^i.
    const MultiWordInt prefix = uniform_prefix(u, static_cast<unsigned>(i));
    if (prefix + 2 <= a.mantissa) return true;
    if (prefix >= a.mantissa + 1) return false;
  }
  return uniform_below(u, ap.exact());
}

constexpr u128 kOne64 = static_cast<u128>(1) << 64;

// A value in [0, 1] bracketed as [lo, hi] * 2^-64.
struct Bracket {
  u128 lo;
  u128 hi;
};

Bracket fixed_bracket(const Rational& x) {
  const MultiWordInt scaled = x.num() << 64;
  const MultiWordInt q = scaled / x.den();
  const bool exact = q * x.den() == scaled;
  const u128 lo = to_u128(q);
  return Bracket{lo, exact ? lo : lo + 1};
}

u128 mul_down(u128 a, u128 b) {
  if (a == kOne64) return b;
  if (b == kOne64) return a;
  return (a * b) >> 64;
}

u128 mul_up(u128 a, u128 b) {
  if (a == kOne64) return b;
  if (b == kOne64) return a;
  const u128 prod = a * b;
  return (prod >> 64) + ((prod & (kOne64 - 1)) != 0 ? 1 : 0);
}

// Bracket of p* from the alternating series 1 - C(n,2) q / n + C(n,3) q^2 / n - ...
// whose terms decrease when nq <= 1, so even partial sums lie below p* and
// odd ones above. Sixteen terms leave a gap near 1/17!.
Bracket pstar_bracket(const Bracket& qb, std::uint64_t n) {
  using i128 = __int128;
  u128 tlo = kOne64, thi = kOne64;
  i128 slo = static_cast<i128>(kOne64), shi = static_cast<i128>(kOne64);
  i128 best_lo = 0, best_hi = static_cast<i128>(kOne64);
  const std::uint64_t terms = std::min<std::uint64_t>(n, 16);
  for (std::uint64_t j = 1; j < terms; ++j) {
    const u128 rlo = qb.lo * (n - j);
    const u128 rhi = std::min(qb.hi * (n - j), kOne64);
    tlo = mul_down(tlo, std::min(rlo, kOne64)) / (j + 1);
    const u128 up = mul_up(thi, rhi);
    thi = up / (j + 1) + (up % (j + 1) != 0 ? 1 : 0);
    if ((j + 1) % 2 == 1) {
      slo += static_cast<i128>(tlo);
      shi += static_cast<i128>(thi);
      best_hi = std::min(best_hi, shi);
    } else {
      slo -= static_cast<i128>(thi);
      shi -= static_cast<i128>(tlo);
      best_lo = std::max(best_lo, slo);
    }
  }
  if (terms == n) {
    best_lo = std::max(best_lo, slo);
    best_hi = std::min(best_hi, shi);
  }
  best_lo = std::max<i128>(best_lo, 0);
  best_hi = std::min<i128>(best_hi, static_cast<i128>(kOne64));
  return Bracket{static_cast<u128>(best_lo), static_cast<u128>(std::max(best_hi, best_lo))};
}

// 0 or 1 when the first block of U settles U < value, -1 otherwise.
int decide(LazyUniform& u, const Bracket& b) {
  const u128 w = u.word(0);
  if (w + 1 <= b.lo) return 1;
  if (w >= b.hi) return 0;
  return -1;
}

}  // namespace

void pstar_bounds64(const Rational& q, std::uint64_t n, u128& lo, u128& hi) {
  check_pstar_args(q, n);
  if (n == 1) {
    lo = hi = kOne64;
    return;
  }
  const Bracket b = pstar_bracket(fixed_bracket(q), n);
  lo = b.lo;
  hi = b.hi;
}

bool ber_rational(RandomSource& src, const Rational& p) {
  check_probability(p);
  if (p.is_zero()) return false;
  LazyUniform u(src);
  return uniform_below(u, p);
}

bool ber_fraction(RandomSource& src, u128 x, u128 y) {
  LazyUniform u(src);
  return uniform_below_fraction(u, x, y);
}

bool ber_dyadic(RandomSource& src, u128 num, unsigned shift) {
  LazyUniform u(src);
  return uniform_below_dyadic(u, num, shift);
}

bool ber_approx(RandomSource& src, const ApproximableProbability& ap) {
  LazyUniform u(src);
  return ber_approx_from(u, ap);
}

Rational pstar_exact(const Rational& q, std::uint64_t n) {
  check_pstar_args(q, n);
  if (n == 1) return Rational(1);
  const MultiWordInt& a = q.num();
  const MultiWordInt& b = q.den();
  const MultiWordInt bn1 = int_pow(b, n - 1);
  MultiWordInt num = bn1 * b - int_pow(b - a, n);
  MultiWordInt den = bn1 * a * n;
  return Rational(std::move(num), std::move(den));
}

DyadicApprox pstar_approx(const Rational& q, std::uint64_t n, int i) {
  check_pstar_args(q, n);
  if (i < 0) throw std::invalid_argument("pstar_approx: negative precision");
  if (n == 1) return DyadicApprox{MultiWordInt(1) << static_cast<unsigned>(i), i};
  const std::uint64_t terms = std::min<std::uint64_t>(n, static_cast<std::uint64_t>(i) + 2);
  const MultiWordInt& a = q.num();
  const MultiWordInt& b = q.den();
  // sum_{j=1}^{J} (-1)^(j+1) C(n, j) A^(j-1) B^(J-j) over n B^(J-1)
  std::vector<MultiWordInt> bpow(terms);
  bpow[0] = 1;
  for (std::uint64_t j = 1; j < terms; ++j) bpow[j] = bpow[j - 1] * b;
  MultiWordInt sum;
  MultiWordInt binom(n);  // C(n, 1)
  MultiWordInt apow(1);
  for (std::uint64_t j = 1; j <= terms; ++j) {
    MultiWordInt term = binom * apow * bpow[terms - j];
    if (j % 2 == 1) sum += term;
    else sum -= term;
    binom = binom * (n - j) / (j + 1);
    apow *= a;
  }
  return dyadic_round(Rational(std::move(sum), bpow[terms - 1] * n), i);
}

DyadicApprox half_inv_pstar_approx(const Rational& q, std::uint64_t n, int i) {
  if (i < 0) throw std::invalid_argument("half_inv_pstar_approx: negative precision");
  const Rational p = pstar_approx(q, n, i + 2).value();
  return dyadic_round(Rational(p.den(), p.num() * 2), i);
}

namespace {

bool ber_pstar_from(RandomSource& src, const Rational& q, const Bracket& pb, std::uint64_t n) {
  if (n == 1) return true;
  LazyUniform u(src);
  const int fast = decide(u, pb);
  if (fast >= 0) return fast == 1;
  const ApproximableProbability ap{
      [&](int i) { return pstar_approx(q, n, i); },
      [&] { return pstar_exact(q, n); },
  };
  return ber_approx_from(u, ap);
}

bool ber_half_inv_pstar_from(RandomSource& src, const Rational& q, const Bracket& p, std::uint64_t n) {
  if (n == 1) return (src.next_word() >> 63) != 0;
  LazyUniform u(src);
  if (p.lo != 0) {
    // 1/(2 p*) * 2^64 = 2^127 / (p* * 2^64)
    const u128 top = static_cast<u128>(1) << 127;
    const Bracket h{top / p.hi, std::min(top / p.lo + (top % p.lo != 0 ? 1 : 0), kOne64)};
    const int fast = decide(u, h);
    if (fast >= 0) return fast == 1;
  }
  const ApproximableProbability ap{
      [&](int i) { return half_inv_pstar_approx(q, n, i); },
      [&] { return pstar_exact(q, n).reciprocal() * Rational(MultiWordInt(1), MultiWordInt(2)); },
  };
  return ber_approx_from(u, ap);
}

}  // namespace

bool ber_pstar(RandomSource& src, const Rational& q, std::uint64_t n) {
  check_pstar_args(q, n);
  return ber_pstar_from(src, q, n == 1 ? Bracket{} : pstar_bracket(fixed_bracket(q), n), n);
}

bool ber_half_inv_pstar(RandomSource& src, const Rational& q, std::uint64_t n) {
  check_pstar_args(q, n);
  return ber_half_inv_pstar_from(src, q, n == 1 ? Bracket{} : pstar_bracket(fixed_bracket(q), n), n);
}

bool ber_pstar(RandomSource& src, const BoundedGeometric& g, std::uint64_t n) {
  if (n == 0 || n > kOne64 / g.p_hi64()) check_pstar_args(g.p(), n);
  Bracket b{};
  if (n > 1) g.pstar_bounds(n, b.lo, b.hi);
  return ber_pstar_from(src, g.p(), b, n);
}

bool ber_half_inv_pstar(RandomSource& src, const BoundedGeometric& g, std::uint64_t n) {
  if (n == 0 || n > kOne64 / g.p_hi64()) check_pstar_args(g.p(), n);
  Bracket b{};
  if (n > 1) g.pstar_bounds(n, b.lo, b.hi);
  return ber_half_inv_pstar_from(src, g.p(), b, n);
}

void BoundedGeometric::pstar_bounds(std::uint64_t n, u128& lo, u128& hi) const {
  PstarMemo& e = pstar_memo_[n % pstar_memo_.size()];
  if (e.n != n) {
    const Bracket b = pstar_bracket(Bracket{p_lo64_, p_hi64_}, n);
    e = PstarMemo{n, b.lo, b.hi};
  }
  lo = e.lo;
  hi = e.hi;
}

BoundedGeometric::BoundedGeometric(const Rational& p)
    : p_((check_open_probability(p), p)), ladder_(Rational(1) - p), log_q_(std::log1p(-p.to_double())) {
  const Bracket b = fixed_bracket(p);
  p_lo64_ = b.lo;
  p_hi64_ = b.hi;
  // Room for the 2 den - num used by T-Geo's n = 2 case.
  small_ = bit_length(p.den()) <= 126;
  if (small_) {
    num128_ = to_u128(p.num());
    den128_ = to_u128(p.den());
  }
}

bool BoundedGeometric::power_coin(RandomSource& src, std::uint64_t k) {
  LazyUniform u(src);
  return ladder_.uniform_below(u, k);
}

std::uint64_t BoundedGeometric::sample(RandomSource& src, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("B-Geo: n must be positive");
  if (n == 1) return 1;
  const std::uint64_t none = n;  // stands for "no k in [1, n-1] qualifies"
  LazyUniform u(src);
  auto ge = [&](std::uint64_t k) { return k >= none || !ladder_.uniform_below(u, k); };

  std::uint64_t guess = 1;
  const double ud = (static_cast<double>(u.word(0)) + 0.5) * 0x1p-64;
  if (log_q_ < 0.0) {
    const double g = std::ceil(std::log(ud) / log_q_);
    if (!(g < static_cast<double>(none))) guess = none;
    else if (g > 1.0) guess = static_cast<std::uint64_t>(g);
  } else {
    guess = none;
  }

  // Find lo < hi with !ge(lo) (lo = 0 counts as such) and ge(hi). Probing
  // guess - 1 first lets the usual second probe, guess, reuse its bracket.
  std::uint64_t lo, hi;
  if (guess > 1 && ge(guess - 1)) {
    hi = guess - 1;
    std::uint64_t step = 1;
    for (;;) {
      if (hi <= step) {
        lo = 0;
        break;
      }
      lo = hi - step;
      if (!ge(lo)) break;
      hi = lo;
      step *= 2;
    }
  } else {
    lo = guess - 1;
    std::uint64_t step = 1;
    for (;;) {
      hi = none - lo <= step ? none : lo + step;
      if (ge(hi)) break;
      lo = hi;
      step *= 2;
    }
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (ge(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

std::uint64_t bgeo(RandomSource& src, const Rational& p, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("B-Geo: n must be positive");
  BoundedGeometric g(p);
  return g.sample(src, n);
}

std::uint64_t bgeo_reference(RandomSource& src, const Rational& p, std::uint64_t n) {
  check_open_probability(p);
  if (n == 0) throw std::invalid_argument("B-Geo: n must be positive");
  if (n == 1) return 1;
  const MultiWordInt qn = p.den() - p.num();
  const MultiWordInt& qd = p.den();
  LazyUniform u(src);
  std::uint64_t lo = 0, hi = n;  // !ge(lo) by convention, ge(n) by convention
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (!uniform_below(u, Rational(int_pow(qn, mid), int_pow(qd, mid)))) hi = mid;
    else lo = mid;
  }
  return hi;
}

std::uint64_t tgeo(RandomSource& src, const Rational& p, std::uint64_t n, TGeoStats* stats) {
  check_open_probability(p);
  if (n == 0) throw std::invalid_argument("T-Geo: n must be positive");
  BoundedGeometric g(p);
  return tgeo(src, g, n, stats);
}

std::uint64_t tgeo(RandomSource& src, BoundedGeometric& g, std::uint64_t n, TGeoStats* stats) {
  if (n == 0) throw std::invalid_argument("T-Geo: n must be positive");
  if (stats) ++stats->calls;
  if (n == 1) return 1;
  const Rational& p = g.p();
  if (n == 2) {
    // Pr[2] = (1-p) / (2-p)
    if (g.small()) return 1 + (ber_fraction(src, g.den128() - g.num128(), 2 * g.den128() - g.num128()) ? 1 : 0);
    return 1 + (ber_rational(src, (Rational(1) - p) / (Rational(2) - p)) ? 1 : 0);
  }
  if (p.num() * n >= p.den()) {
    for (;;) {
      const std::uint64_t k = g.sample(src, n + 1);
      if (k <= n) return k;
    }
  }
  // A uniform proposal i is kept with probability (1-p)^(i-1) / (2 p*), which
  // is exactly half the target mass of i; each round succeeds with
  // probability 1/2.
  if (stats) ++stats->small_np_calls;
  for (;;) {
    if (stats) ++stats->rounds;
    const std::uint64_t i = 1 + src.below(n);
    if (g.power_coin(src, i - 1) && ber_half_inv_pstar(src, g, n)) return i;
  }
}

}  // namespace dpss
