#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "dpss/exact_arith.hpp"
#include "dpss/power_bounds.hpp"
#include "dpss/random.hpp"

namespace dpss {

/// A probability p in [0, 1] known through i-bit approximations
/// (|approx(i) - p| <= 2^-i) and an exact fallback.
struct ApproximableProbability {
  std::function<DyadicApprox(int)> approx;
  std::function<Rational()> exact;
};

/// Precision after which ber_approx compares against exact().
inline constexpr int kApproxPrecisionCap = 256;

/// Ber(p), exact. Throws std::invalid_argument when p is outside [0, 1].
bool ber_rational(RandomSource& src, const Rational& p);

/// Ber(min{1, x/y}) for y > 0, exact; one random word unless x/y is within
/// 2^-64 of the drawn value.
bool ber_fraction(RandomSource& src, u128 x, u128 y);

/// Ber(num / 2^shift), shift <= 128; num may exceed 2^shift (then always 1).
bool ber_dyadic(RandomSource& src, u128 num, unsigned shift);

bool ber_approx(RandomSource& src, const ApproximableProbability& ap);

/// p* = (1 - (1-q)^n) / (n q), as (B^n - (B-A)^n) / (n A B^(n-1)).
/// Throws PreconditionViolation unless 0 < q and n q <= 1.
Rational pstar_exact(const Rational& q, std::uint64_t n);

/// Alternating partial sum of p*'s binomial expansion (min(n, i+2) terms),
/// rounded onto the grid 2^-i. Error at most 2^-i.
DyadicApprox pstar_approx(const Rational& q, std::uint64_t n, int i);

/// 1/(2 p*) from an (i+2)-bit approximation of p*; error at most 2^-i.
DyadicApprox half_inv_pstar_approx(const Rational& q, std::uint64_t n, int i);

/// Machine-word bracket [lo, hi] * 2^-64 of p*, tried before the
/// approximation ladder.
void pstar_bounds64(const Rational& q, std::uint64_t n, u128& lo, u128& hi);

bool ber_pstar(RandomSource& src, const Rational& q, std::uint64_t n);
bool ber_half_inv_pstar(RandomSource& src, const Rational& q, std::uint64_t n);

/// B-Geo(p, n) = min{n, Geo(p)} for one fixed p. Realized as
/// G = min{k in [1, n-1] : U >= (1-p)^k} (n if none), with a floating-point
/// inversion guess that is then confirmed or corrected by exact comparisons.
/// Also carries what the p* and T-Geo samplers need about the same p.
class BoundedGeometric {
 public:
  explicit BoundedGeometric(const Rational& p);  // 0 < p < 1

  std::uint64_t sample(RandomSource& src, std::uint64_t n);

  /// Exact Ber((1-p)^k).
  bool power_coin(RandomSource& src, std::uint64_t k);

  const Rational& p() const { return p_; }
  /// p * 2^64 rounded down and up.
  u128 p_lo64() const { return p_lo64_; }
  u128 p_hi64() const { return p_hi64_; }
  /// p = num/den in 128-bit words, when both fit.
  bool small() const { return small_; }
  u128 num128() const { return num128_; }
  u128 den128() const { return den128_; }

  /// Bracket [lo, hi] * 2^-64 of p* for this p; memoized per n.
  void pstar_bounds(std::uint64_t n, u128& lo, u128& hi) const;

 private:
  struct PstarMemo {
    std::uint64_t n = 0;
    u128 lo = 0;
    u128 hi = 0;
  };

  Rational p_;
  PowerLadder ladder_;
  double log_q_;
  u128 p_lo64_ = 0;
  u128 p_hi64_ = 0;
  bool small_ = false;
  u128 num128_ = 0;
  u128 den128_ = 0;
  mutable std::array<PstarMemo, 8> pstar_memo_{};
};

/// Ber(p*) and Ber(1/(2 p*)) with q = g.p(); require n q <= 1.
bool ber_pstar(RandomSource& src, const BoundedGeometric& g, std::uint64_t n);
bool ber_half_inv_pstar(RandomSource& src, const BoundedGeometric& g, std::uint64_t n);

/// Throws std::invalid_argument unless 0 < p < 1 and n >= 1.
std::uint64_t bgeo(RandomSource& src, const Rational& p, std::uint64_t n);

/// Same distribution by binary search against exact rational powers.
std::uint64_t bgeo_reference(RandomSource& src, const Rational& p, std::uint64_t n);

struct TGeoStats {
  std::uint64_t calls = 0;
  std::uint64_t rounds = 0;  // proposal rounds in the n >= 3, np < 1 case
  std::uint64_t small_np_calls = 0;
};

/// T-Geo(p, n): Pr[i] = p (1-p)^(i-1) / (1 - (1-p)^n) on [1, n], exact.
std::uint64_t tgeo(RandomSource& src, const Rational& p, std::uint64_t n, TGeoStats* stats = nullptr);
std::uint64_t tgeo(RandomSource& src, BoundedGeometric& g, std::uint64_t n, TGeoStats* stats = nullptr);

}  // namespace dpss
