#include "dpss/exact_arith.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace dpss {

namespace mp = boost::multiprecision;

std::uint64_t bit_length(const MultiWordInt& x) {
  const auto& b = x.backend();
  const unsigned size = b.size();
  const auto top = static_cast<std::uint64_t>(b.limbs()[size - 1]);
  if (size == 1 && top == 0) return 0;
  return static_cast<std::uint64_t>(size - 1) * 64 + 64 - static_cast<std::uint64_t>(__builtin_clzll(top));
}

std::vector<std::uint64_t> magnitude_words(const MultiWordInt& x) {
  std::vector<std::uint64_t> out;
  if (x.is_zero()) return out;
  mp::export_bits(abs(x), std::back_inserter(out), 64, false);
  while (!out.empty() && out.back() == 0) out.pop_back();
  return out;
}

MultiWordInt from_magnitude_words(int sign, std::span<const std::uint64_t> words) {
  MultiWordInt r;
  if (words.empty()) return r;
  mp::import_bits(r, words.begin(), words.end(), 64, false);
  return sign < 0 ? MultiWordInt(-r) : r;
}

static_assert(sizeof(boost::multiprecision::limb_type) == 8, "64-bit limbs expected");

MultiWordInt from_u128(u128 v) {
  MultiWordInt r;
  auto& b = r.backend();
  const auto hi = static_cast<std::uint64_t>(v >> 64);
  b.resize(hi != 0 ? 2 : 1, hi != 0 ? 2 : 1);
  b.limbs()[0] = static_cast<std::uint64_t>(v);
  if (hi != 0) b.limbs()[1] = hi;
  return r;
}

u128 to_u128(const MultiWordInt& x) {
  const auto& b = x.backend();
  if (x.sign() < 0 || b.size() > 2) throw std::out_of_range("to_u128: value out of range");
  const u128 lo = b.limbs()[0];
  return b.size() == 2 ? (static_cast<u128>(b.limbs()[1]) << 64) | lo : lo;
}

std::string to_hex(const MultiWordInt& x) {
  if (x.is_zero()) return "0";
  static constexpr char kDigits[] = "0123456789abcdef";
  const auto words = magnitude_words(x);
  std::string digits;
  for (auto it = words.rbegin(); it != words.rend(); ++it) {
    for (int shift = 60; shift >= 0; shift -= 4) digits.push_back(kDigits[(*it >> shift) & 0xf]);
  }
  digits.erase(0, digits.find_first_not_of('0'));
  return (x.sign() < 0 ? "-" : "+") + digits;
}

MultiWordInt from_hex(std::string_view text) {
  int sign = 1;
  if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
    sign = text.front() == '-' ? -1 : 1;
    text.remove_prefix(1);
  }
  if (text.empty()) throw std::invalid_argument("from_hex: empty input");
  MultiWordInt r;
  for (char c : text) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
    else throw std::invalid_argument("from_hex: bad digit");
    r <<= 4;
    r |= d;
  }
  return sign < 0 ? MultiWordInt(-r) : r;
}

std::string to_decimal(const MultiWordInt& x) { return x.str(); }

MultiWordInt from_decimal(std::string_view text) {
  bool neg = false;
  if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
    neg = text.front() == '-';
    text.remove_prefix(1);
  }
  if (text.empty()) throw std::invalid_argument("from_decimal: empty input");
  MultiWordInt r;
  for (char c : text) {
    if (c < '0' || c > '9') throw std::invalid_argument("from_decimal: bad digit");
    r *= 10;
    r += c - '0';
  }
  return neg ? MultiWordInt(-r) : r;
}

MultiWordInt int_pow(const MultiWordInt& b, std::uint64_t k) {
  MultiWordInt result(1);
  MultiWordInt base = b;
  while (k != 0) {
    if (k & 1u) result *= base;
    k >>= 1;
    if (k != 0) base *= base;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Rational

Rational::Rational(MultiWordInt num, MultiWordInt den) : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw std::invalid_argument("Rational: zero denominator");
  if (den_.sign() < 0) {
    num_ = -num_;
    den_ = -den_;
  }
}

Rational Rational::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return from_int(from_decimal(text));
  return Rational(from_decimal(text.substr(0, slash)), from_decimal(text.substr(slash + 1)));
}

Rational Rational::reduced() const {
  if (num_.is_zero()) return Rational(MultiWordInt(0), MultiWordInt(1), 0);
  const MultiWordInt g = gcd(num_, den_);
  return Rational(num_ / g, den_ / g, 0);
}

Rational Rational::reciprocal() const {
  if (num_.is_zero()) throw std::invalid_argument("Rational: reciprocal of zero");
  return Rational(den_, num_);
}

std::string Rational::to_string() const {
  if (den_ == 1) return num_.str();
  return num_.str() + "/" + den_.str();
}

double Rational::to_double() const {
  if (num_.is_zero()) return 0.0;
  // Scale both parts to ~64 significant bits before converting.
  const auto nb = static_cast<std::int64_t>(bit_length(num_));
  const auto db = static_cast<std::int64_t>(bit_length(den_));
  const std::int64_t ns = std::max<std::int64_t>(0, nb - 64);
  const std::int64_t ds = std::max<std::int64_t>(0, db - 64);
  const double n = static_cast<double>(MultiWordInt(num_ >> ns));
  const double d = static_cast<double>(MultiWordInt(den_ >> ds));
  return std::ldexp(n / d, static_cast<int>(ns - ds));
}

Rational operator+(const Rational& a, const Rational& b) {
  if (a.den_ == b.den_) return Rational(a.num_ + b.num_, a.den_, 0);
  return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_, 0);
}

Rational operator-(const Rational& a, const Rational& b) {
  if (a.den_ == b.den_) return Rational(a.num_ - b.num_, a.den_, 0);
  return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_, 0);
}

Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.num_, a.den_ * b.den_, 0);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_.is_zero()) throw std::invalid_argument("Rational: division by zero");
  return Rational(a.num_ * b.den_, a.den_ * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const MultiWordInt lhs = a.num_ * b.den_;
  const MultiWordInt rhs = b.num_ * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Rational rat_add(const Rational& a, const Rational& b) { return a + b; }
Rational rat_sub(const Rational& a, const Rational& b) { return a - b; }
Rational rat_mul(const Rational& a, const Rational& b) { return a * b; }
Rational rat_div(const Rational& a, const Rational& b) { return a / b; }
std::strong_ordering rat_cmp(const Rational& a, const Rational& b) { return a <=> b; }

Rational mul_pow2(const Rational& a, std::int64_t k) {
  if (k >= 0) return Rational(a.num() << static_cast<unsigned>(k), a.den());
  return Rational(a.num(), a.den() << static_cast<unsigned>(-k));
}

Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }

namespace {

// Sign of (A - 2^c * B) for A, B > 0.
int compare_with_pow2(const MultiWordInt& a, const MultiWordInt& b, std::int64_t c) {
  if (c >= 0) {
    const MultiWordInt rhs = b << static_cast<unsigned>(c);
    return a < rhs ? -1 : (a > rhs ? 1 : 0);
  }
  const MultiWordInt lhs = a << static_cast<unsigned>(-c);
  return lhs < b ? -1 : (lhs > b ? 1 : 0);
}

}  // namespace

std::int64_t floor_log2(const Rational& x) {
  if (x.sign() <= 0) throw std::invalid_argument("floor_log2: argument must be positive");
  // With a = bit_length(A), b = bit_length(B): 2^(a-1) <= A < 2^a and
  // 2^(b-1) <= B < 2^b, so A/B lies in (2^(a-b-1), 2^(a-b+1)).
  const std::int64_t c = static_cast<std::int64_t>(bit_length(x.num())) -
                         static_cast<std::int64_t>(bit_length(x.den()));
  return compare_with_pow2(x.num(), x.den(), c) >= 0 ? c : c - 1;
}

std::int64_t ceil_log2(const Rational& x) {
  if (x.sign() <= 0) throw std::invalid_argument("ceil_log2: argument must be positive");
  const std::int64_t c = static_cast<std::int64_t>(bit_length(x.num())) -
                         static_cast<std::int64_t>(bit_length(x.den())) + 1;
  // ceil(log2 x) is c - 1 or c; it is c exactly when A > 2^(c-1) * B.
  return compare_with_pow2(x.num(), x.den(), c - 1) > 0 ? c : c - 1;
}

Rational DyadicApprox::value() const {
  return Rational(mantissa, MultiWordInt(1) << static_cast<unsigned>(precision_bits));
}

DyadicApprox dyadic_round(const Rational& x, int i) {
  if (i < 0) throw std::invalid_argument("dyadic_round: negative precision");
  if (x.sign() < 0 || x > Rational(2)) throw std::invalid_argument("dyadic_round: x outside [0, 2]");
  // nearest integer to x * 2^i: floor((2 * num * 2^i + den) / (2 * den))
  const unsigned shift = static_cast<unsigned>(i + 1);
  MultiWordInt scaled = (x.num() << shift) + x.den();
  MultiWordInt mantissa = scaled / (x.den() << 1);
  return DyadicApprox{std::move(mantissa), i};
}

}  // namespace dpss
