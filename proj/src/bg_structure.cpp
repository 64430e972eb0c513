#include "dpss/bg_structure.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "dpss/errors.hpp"
#include "dpss/power_bounds.hpp"

namespace dpss {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

}  // namespace

std::uint64_t pad_to_power_of_16(std::uint64_t n) {
  std::uint64_t p = 1;
  while (p < n) p *= 16;
  return p;
}

std::uint64_t pad_to_power_of_2(std::uint64_t n) { return std::bit_ceil(std::max<std::uint64_t>(n, 2)); }

BGStructure::BGStructure(std::uint64_t padded_n)
    : n_(padded_n),
      log_n_(static_cast<unsigned>(std::countr_zero(padded_n))),
      bucket_set_(kBuckets),
      group_set_((kBuckets + std::max(1u, static_cast<unsigned>(std::countr_zero(padded_n))) - 1) /
                 std::max(1u, static_cast<unsigned>(std::countr_zero(padded_n)))) {
  if (padded_n < 2 || !std::has_single_bit(padded_n)) {
    throw std::invalid_argument("BGStructure: N must be a power of two >= 2");
  }
}

BGStructure BGStructure::build(std::span<const BGEntry> items) {
  BGStructure s(std::max<std::uint64_t>(16, pad_to_power_of_16(items.size())));
  for (const auto& e : items) s.insert(e.key, e.weight);
  return s;
}

unsigned BGStructure::group_last_bucket(unsigned g) const {
  return std::min(kBuckets - 1, (g + 1) * log_n_ - 1);
}

Location BGStructure::insert(std::uint64_t key, u128 weight) {
  if (weight == 0) throw std::invalid_argument("BGStructure: zero weight");
  const unsigned i = bucket_of(weight);
  auto& b = buckets_[i];
  if (b.empty()) {
    bucket_set_.insert(i);
    const unsigned g = group_of(i);
    if (group_buckets_[g]++ == 0) group_set_.insert(g);
  }
  b.push_back(BGEntry{key, weight});
  ++size_;
  total_ += weight;
  return Location{i, static_cast<std::uint32_t>(b.size() - 1)};
}

std::optional<std::uint64_t> BGStructure::erase(Location loc) {
  auto& b = buckets_.at(loc.bucket);
  if (loc.index >= b.size()) throw std::invalid_argument("BGStructure: no entry at location");
  total_ -= b[loc.index].weight;
  --size_;
  std::optional<std::uint64_t> moved;
  if (loc.index + 1 != b.size()) {
    b[loc.index] = b.back();
    moved = b[loc.index].key;
  }
  b.pop_back();
  if (b.empty()) {
    bucket_set_.erase(loc.bucket);
    const unsigned g = group_of(loc.bucket);
    if (--group_buckets_[g] == 0) group_set_.erase(g);
  }
  return moved;
}

void BGStructure::audit() const {
  bucket_set_.audit();
  group_set_.audit();
  std::size_t count = 0;
  u128 total = 0;
  std::array<unsigned, kBuckets> per_group{};
  for (unsigned i = 0; i < kBuckets; ++i) {
    const auto& b = buckets_[i];
    if (b.empty() == bucket_set_.contains(i)) {
      throw InvalidState("BGStructure: bucket set disagrees with bucket " + std::to_string(i));
    }
    if (!b.empty()) ++per_group[group_of(i)];
    for (const auto& e : b) {
      if (e.weight == 0 || bucket_of(e.weight) != i) {
        throw InvalidState("BGStructure: weight outside [2^i, 2^(i+1)) in bucket " + std::to_string(i));
      }
      total += e.weight;
    }
    count += b.size();
  }
  for (unsigned g = 0; g < group_count(); ++g) {
    if (per_group[g] != group_buckets_[g] || (per_group[g] != 0) != group_set_.contains(g)) {
      throw InvalidState("BGStructure: group bookkeeping disagrees for group " + std::to_string(g));
    }
  }
  if (count != size_) throw InvalidState("BGStructure: size mismatch");
  if (total != total_) throw InvalidState("BGStructure: total weight mismatch");
}

std::size_t BGStructure::resident_words() const {
  std::size_t words = 8 + kBuckets * sizeof(Bucket) / 8 + kBuckets / 8;
  for (const auto& b : buckets_) words += b.capacity() * sizeof(BGEntry) / 8 + b.capacity() / Bucket::kBlock;
  return words + bucket_set_.resident_words() + group_set_.resident_words();
}

// ---------------------------------------------------------------------------

QueryWeight::QueryWeight(Rational w) : w_(std::move(w)) {
  if (w_.sign() <= 0) throw DegenerateQuery();
  w_ = w_.reduced();
  floor_ = dpss::floor_log2(w_);
  ceil_ = dpss::ceil_log2(w_);
  small_ = bit_length(w_.num()) <= 128 && bit_length(w_.den()) <= 128;
  if (small_) {
    num128_ = to_u128(w_.num());
    den128_ = to_u128(w_.den());
  }
}

Rational QueryWeight::ratio(u128 a) const {
  MultiWordInt num = from_u128(a) * w_.den();
  if (num >= w_.num()) return Rational(1);
  return Rational(std::move(num), w_.num());
}

Rational QueryWeight::pow2_ratio(unsigned e) const {
  return Rational(w_.den() << e, w_.num());
}

namespace {

// x = a s d and y = n t in 128 bits, if nothing overflows.
bool scaled_pair(u128 a, u128 s, u128 d, u128 n, u128 t, u128& x, u128& y) {
  return !__builtin_mul_overflow(a, s, &x) && !__builtin_mul_overflow(x, d, &x) && !__builtin_mul_overflow(n, t, &y);
}

}  // namespace

int QueryWeight::compare(u128 a, u128 s, u128 t) const {
  u128 x, y;
  if (small_ && scaled_pair(a, s, den128_, num128_, t, x, y)) return x < y ? -1 : (x > y ? 1 : 0);
  const MultiWordInt lhs = from_u128(a) * from_u128(s) * w_.den();
  const MultiWordInt rhs = w_.num() * from_u128(t);
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

bool QueryWeight::coin(RandomSource& src, u128 a, u128 s, u128 t) const {
  u128 x, y;
  if (small_ && scaled_pair(a, s, den128_, num128_, t, x, y)) return ber_fraction(src, x, y);
  MultiWordInt num = from_u128(a) * from_u128(s) * w_.den();
  MultiWordInt den = w_.num() * from_u128(t);
  if (num >= den) return true;
  return ber_rational(src, Rational(std::move(num), std::move(den)));
}

BoundedGeometric& QueryWeight::geo_pow2(unsigned e) const {
  if (e >= geo_.size() || pow2_at_least(e)) throw std::invalid_argument("geo_pow2: need 2^e < W and e < 128");
  auto& slot = geo_[e];
  if (!slot) slot = std::make_unique<BoundedGeometric>(pow2_ratio(e));
  return *slot;
}

GroupRange bg_classify(unsigned log_n, std::int64_t max_group, const QueryWeight& w) {
  const auto L = static_cast<std::int64_t>(log_n);
  // Group j is insignificant iff its top bucket (j+1)L - 1 has
  // 2^((j+1)L) / W <= 1/N^2, i.e. (j+1)L <= floor(log2(W/N^2)); it is certain
  // iff its bottom bucket jL has 2^(jL) >= W, i.e. jL >= ceil(log2 W).
  const std::int64_t f = w.floor_log2() - 2 * L;
  std::int64_t j1 = floor_div(f, L) - 1;
  std::int64_t j2 = ceil_div(w.ceil_log2(), L);
  j1 = std::clamp<std::int64_t>(j1, -1, max_group);
  j2 = std::clamp<std::int64_t>(j2, 0, max_group + 1);
  return GroupRange{j1, j2};
}

GroupRange bg_classify(const BGStructure& s, const QueryWeight& w) {
  return bg_classify(s.log_n(), static_cast<std::int64_t>(s.group_count()) - 1, w);
}

void bg_query_insignificant(const BGStructure& s, std::int64_t max_bucket, const QueryWeight& w,
                            SkipSampler& skip, RandomSource& src, std::vector<std::uint64_t>& out) {
  if (max_bucket < 0) return;
  const auto first = s.nonempty_buckets().min();
  if (!first || static_cast<std::int64_t>(*first) > max_bucket) return;
  const std::uint64_t bound = std::max<std::uint64_t>(s.padded_n(), s.size());
  const std::uint64_t k = skip.geo().sample(src, bound + 1);
  if (k > bound) return;
  std::uint64_t pos = 0;
  for (auto i = s.nonempty_buckets().successor(0); i && static_cast<std::int64_t>(*i) <= max_bucket;
       i = s.nonempty_buckets().successor(*i + 1)) {
    const auto& b = s.bucket(*i);
    if (pos + b.size() < k) {
      pos += b.size();
      continue;
    }
    for (const auto& e : b) {
      ++pos;
      if (pos < k) continue;
      if (pos == k) {
        // p_x / rho = w / (W rho)
        if (w.compare(e.weight, skip.rho_den(), skip.rho_num()) > 0) {
          throw InvalidState("insignificant item with p_x > rho");
        }
        if (w.coin(src, e.weight, skip.rho_den(), skip.rho_num())) out.push_back(e.key);
      } else if (w.coin(src, e.weight)) {
        out.push_back(e.key);
      }
    }
  }
}

void bg_query_certain(const BGStructure& s, std::int64_t min_bucket, std::vector<std::uint64_t>& out) {
  if (min_bucket >= BGStructure::kBuckets) return;
  const unsigned from = static_cast<unsigned>(std::max<std::int64_t>(min_bucket, 0));
  for (auto i = s.nonempty_buckets().successor(from); i; i = s.nonempty_buckets().successor(*i + 1)) {
    for (const auto& e : s.bucket(*i)) out.push_back(e.key);
  }
}

void bg_extract_items(const BGStructure& s, std::span<const unsigned> candidates, const QueryWeight& w,
                      RandomSource& src, std::vector<std::uint64_t>& out, QueryStats* stats) {
  for (unsigned i : candidates) {
    const auto& b = s.bucket(i);
    extract_bucket(
        i, b.size(), [&](std::uint64_t k) { return b[k].weight; }, w, src,
        [&](std::uint64_t k) { out.push_back(b[k].key); }, stats);
  }
}

void DirectNextLevel::sample_group(unsigned group, const QueryWeight& w, RandomSource& src,
                                   std::vector<unsigned>& candidates) {
  const unsigned last = s_->group_last_bucket(group);
  for (auto i = s_->nonempty_buckets().successor(s_->group_first_bucket(group)); i && *i <= last;
       i = s_->nonempty_buckets().successor(*i + 1)) {
    if (w.coin(src, s_->next_level_weight(*i))) candidates.push_back(*i);
  }
}

void bg_query(const BGStructure& s, const QueryWeight& w, SkipSampler& skip, NextLevelSampler& next,
              RandomSource& src, std::vector<std::uint64_t>& out, QueryStats* stats) {
  if (s.size() == 0) return;
  const GroupRange r = bg_classify(s, w);
  const auto L = static_cast<std::int64_t>(s.log_n());
  const std::int64_t significant = r.j2 - r.j1 - 1;
  if (significant > 3) throw InvalidState("more than three significant groups");
  if (stats) {
    stats->significant_groups += static_cast<std::uint64_t>(significant);
    stats->max_significant_groups = std::max<std::uint64_t>(stats->max_significant_groups,
                                                            static_cast<std::uint64_t>(significant));
  }
  bg_query_insignificant(s, (r.j1 + 1) * L - 1, w, skip, src, out);
  bg_query_certain(s, r.j2 * L, out);
  std::vector<unsigned> candidates;
  for (std::int64_t j = r.j1 + 1; j < r.j2; ++j) {
    const auto g = static_cast<unsigned>(j);
    if (!s.nonempty_groups().contains(g)) continue;
    candidates.clear();
    next.sample_group(g, w, src, candidates);
    bg_extract_items(s, candidates, w, src, out, stats);
  }
}

}  // namespace dpss
