#pragma once

#include <array>
#include <memory>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dpss/bounded_int_set.hpp"
#include "dpss/exact_arith.hpp"
#include "dpss/random.hpp"
#include "dpss/samplers.hpp"

namespace dpss {

struct BGEntry {
  std::uint64_t key;  // item id at level 1, parent bucket index below
  u128 weight;        // >= 1
};

struct Location {
  std::uint32_t bucket;
  std::uint32_t index;
};

/// Bucket index of a positive weight: floor(log2 w).
inline unsigned bucket_of(u128 w) {
  const auto hi = static_cast<std::uint64_t>(w >> 64);
  if (hi != 0) return 127u - static_cast<unsigned>(__builtin_clzll(hi));
  return 63u - static_cast<unsigned>(__builtin_clzll(static_cast<std::uint64_t>(w)));
}

/// Append / pop-back array stored in fixed-size blocks, so growth never moves
/// elements: push_back is O(1) apart from the block directory, which holds
/// one pointer per 64 elements. A trailing block is freed only once two are
/// unused, so alternating push/pop does not thrash.
template <class T>
class PagedArray {
 public:
  static constexpr unsigned kLogBlock = 6;
  static constexpr std::size_t kBlock = std::size_t{1} << kLogBlock;

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t capacity() const { return blocks_.size() * kBlock; }

  T& operator[](std::size_t k) { return blocks_[k >> kLogBlock][k & (kBlock - 1)]; }
  const T& operator[](std::size_t k) const { return blocks_[k >> kLogBlock][k & (kBlock - 1)]; }
  T& back() { return (*this)[size_ - 1]; }

  void push_back(const T& v) {
    if (size_ == capacity()) blocks_.push_back(std::make_unique<T[]>(kBlock));
    (*this)[size_++] = v;
  }
  void pop_back() {
    --size_;
    if (capacity() >= size_ + 2 * kBlock) blocks_.pop_back();
  }

  class const_iterator {
   public:
    const_iterator(const PagedArray* a, std::size_t k) : a_(a), k_(k) {}
    const T& operator*() const { return (*a_)[k_]; }
    const_iterator& operator++() {
      ++k_;
      return *this;
    }
    bool operator!=(const const_iterator& o) const { return k_ != o.k_; }

   private:
    const PagedArray* a_;
    std::size_t k_;
  };
  const_iterator begin() const { return {this, 0}; }
  const_iterator end() const { return {this, size_}; }

 private:
  std::vector<std::unique_ptr<T[]>> blocks_;
  std::size_t size_ = 0;
};

/// Smallest power of 16 that is >= max(n, 1).
std::uint64_t pad_to_power_of_16(std::uint64_t n);
/// Smallest power of 2 that is >= max(n, 2).
std::uint64_t pad_to_power_of_2(std::uint64_t n);

/// One-level bucket-grouping structure: items bucketed by floor(log2 w),
/// buckets grouped by floor(i / log2 N). N is fixed at construction and only
/// enters the query formulas; no dummy items are stored.
class BGStructure {
 public:
  static constexpr unsigned kBuckets = 128;

  explicit BGStructure(std::uint64_t padded_n);

  /// Builds with N = the item count padded to a power of 16.
  static BGStructure build(std::span<const BGEntry> items);

  std::uint64_t padded_n() const { return n_; }
  unsigned log_n() const { return log_n_; }
  std::size_t size() const { return size_; }
  u128 total_weight() const { return total_; }

  /// Appends to bucket floor(log2 weight); weight must be positive.
  Location insert(std::uint64_t key, u128 weight);
  /// Swap-removes the entry at loc. Returns the key of the entry that moved
  /// into loc, if any.
  std::optional<std::uint64_t> erase(Location loc);

  using Bucket = PagedArray<BGEntry>;

  const Bucket& bucket(unsigned i) const { return buckets_[i]; }
  std::size_t bucket_size(unsigned i) const { return buckets_[i].size(); }
  const BoundedIntSet& nonempty_buckets() const { return bucket_set_; }
  const BoundedIntSet& nonempty_groups() const { return group_set_; }

  unsigned group_of(unsigned bucket) const { return bucket / log_n_; }
  unsigned group_count() const { return (kBuckets + log_n_ - 1) / log_n_; }
  unsigned group_first_bucket(unsigned g) const { return g * log_n_; }
  unsigned group_last_bucket(unsigned g) const;

  /// Weight of the next-level item standing for bucket i: 2^(i+1) |B(i)|.
  u128 next_level_weight(unsigned i) const { return (static_cast<u128>(buckets_[i].size())) << (i + 1); }

  /// Full scan of bucket ranges, sets and the total weight; throws InvalidState.
  void audit() const;

  std::size_t resident_words() const;

 private:
  std::uint64_t n_;
  unsigned log_n_;
  std::size_t size_ = 0;
  u128 total_ = 0;
  std::array<Bucket, kBuckets> buckets_;
  std::array<std::uint8_t, kBuckets> group_buckets_{};  // non-empty buckets per group
  BoundedIntSet bucket_set_;
  BoundedIntSet group_set_;
};

/// The parameterized total weight of one query and the quantities derived
/// from it. Holds lazily built B-Geo samplers for p = 2^e / W, so one
/// instance should serve every query with the same W.
class QueryWeight {
 public:
  explicit QueryWeight(Rational w);  // throws DegenerateQuery unless w > 0

  const Rational& value() const { return w_; }
  std::int64_t floor_log2() const { return floor_; }
  std::int64_t ceil_log2() const { return ceil_; }

  /// min{1, a / W} for a positive integer a.
  Rational ratio(u128 a) const;
  /// 2^e / W.
  Rational pow2_ratio(unsigned e) const;
  /// Whether 2^e >= W.
  bool pow2_at_least(std::int64_t e) const { return e >= ceil_; }

  /// Sign of a s - W t.
  int compare(u128 a, u128 s = 1, u128 t = 1) const;
  /// Ber(min{1, a s / (W t)}), exact.
  bool coin(RandomSource& src, u128 a, u128 s = 1, u128 t = 1) const;

  /// B-Geo sampler for p = 2^e / W; requires 2^e < W and e <= 127.
  BoundedGeometric& geo_pow2(unsigned e) const;

 private:
  Rational w_;
  std::int64_t floor_;
  std::int64_t ceil_;
  bool small_ = false;  // W = num128_ / den128_ exactly
  u128 num128_ = 0;
  u128 den128_ = 0;
  mutable std::array<std::unique_ptr<BoundedGeometric>, 128> geo_;
};

/// Runtime counters collected during queries.
struct QueryStats {
  std::uint64_t queries = 0;
  std::uint64_t significant_groups = 0;
  std::uint64_t max_significant_groups = 0;
  std::uint64_t candidate_buckets = 0;
  std::uint64_t final_level_calls = 0;
  std::uint64_t table_samples = 0;
  std::uint64_t table_bits = 0;
  std::uint64_t table_accepts = 0;
  std::uint64_t direct_slots = 0;
  TGeoStats tgeo;
};

/// Group classification: groups <= j1 are insignificant (every bucket has
/// 2^(i+1)/W <= 1/N^2), groups >= j2 certain (2^i >= W), the rest significant.
struct GroupRange {
  std::int64_t j1;
  std::int64_t j2;
};
GroupRange bg_classify(const BGStructure& s, const QueryWeight& w);
GroupRange bg_classify(unsigned log_n, std::int64_t max_group, const QueryWeight& w);

/// Skip sampler at rate rho (1/N^2 in the BG levels), shared across queries.
/// rho's numerator and denominator must fit in 128 bits.
class SkipSampler {
 public:
  explicit SkipSampler(const Rational& rho)
      : rho_(rho.reduced()), geo_(rho_), num_(to_u128(rho_.num())), den_(to_u128(rho_.den())) {}
  const Rational& rho() const { return rho_; }
  u128 rho_num() const { return num_; }
  u128 rho_den() const { return den_; }
  BoundedGeometric& geo() { return geo_; }

 private:
  Rational rho_;
  BoundedGeometric geo_;
  u128 num_;
  u128 den_;
};

/// Skip pass: items of buckets <= max_bucket, each with p_x <= rho.
void bg_query_insignificant(const BGStructure& s, std::int64_t max_bucket, const QueryWeight& w,
                            SkipSampler& skip, RandomSource& src, std::vector<std::uint64_t>& out);

/// Certain buckets: every item of buckets >= min_bucket.
void bg_query_certain(const BGStructure& s, std::int64_t min_bucket, std::vector<std::uint64_t>& out);

/// Item extraction from one bucket i of n items (weights in [2^i, 2^(i+1)), read
/// positionally through weight_at(k), k = 0..n-1), which was selected as a
/// candidate with probability min{1, 2^(i+1) n / W}. Calls emit(k) for every
/// item kept, so that each is kept with overall probability min{1, w/W}.
template <class WeightAt, class Emit>
void extract_bucket(unsigned i, std::uint64_t n, WeightAt&& weight_at, const QueryWeight& w, RandomSource& src,
                    Emit&& emit, QueryStats* stats) {
  if (n == 0) return;
  if (stats) ++stats->candidate_buckets;
  if (w.pow2_at_least(static_cast<std::int64_t>(i) + 1)) {
    // p = 1: every item is potential and is kept with probability p_x.
    for (std::uint64_t k = 0; k < n; ++k) {
      if (w.coin(src, weight_at(k))) emit(k);
    }
    return;
  }
  BoundedGeometric& geo = w.geo_pow2(i + 1);  // p = 2^(i+1) / W
  std::uint64_t k;
  if (w.compare(n, static_cast<u128>(1) << (i + 1)) >= 0) {
    k = geo.sample(src, n + 1);
    if (k > n) return;
  } else {
    if (!ber_pstar(src, geo, n)) return;
    k = tgeo(src, geo, n, stats ? &stats->tgeo : nullptr);
  }
  while (k <= n) {
    // p_x / p = w / 2^(i+1), which lies in [1/2, 1).
    if (ber_dyadic(src, weight_at(k - 1), i + 1)) emit(k - 1);
    k += geo.sample(src, n + 1);
  }
}

/// Item extraction: candidate bucket i arrived with probability
/// min{1, 2^(i+1) |B(i)| / W}; emits each of its items independently with
/// overall probability min{1, w/W}.
void bg_extract_items(const BGStructure& s, std::span<const unsigned> candidates, const QueryWeight& w,
                      RandomSource& src, std::vector<std::uint64_t>& out, QueryStats* stats = nullptr);

/// Supplies, for a significant group, a PSS sample (parameters (0, W)) of that
/// group's next-level items as a list of bucket indices.
class NextLevelSampler {
 public:
  virtual ~NextLevelSampler() = default;
  virtual void sample_group(unsigned group, const QueryWeight& w, RandomSource& src,
                            std::vector<unsigned>& candidates) = 0;
};

/// Next-level sampling by one exact coin per bucket of the group.
class DirectNextLevel : public NextLevelSampler {
 public:
  explicit DirectNextLevel(const BGStructure& s) : s_(&s) {}
  void sample_group(unsigned group, const QueryWeight& w, RandomSource& src,
                    std::vector<unsigned>& candidates) override;

 private:
  const BGStructure* s_;
};

/// One query on one structure. Throws InvalidState if more than three
/// groups are significant.
void bg_query(const BGStructure& s, const QueryWeight& w, SkipSampler& skip, NextLevelSampler& next,
              RandomSource& src, std::vector<std::uint64_t>& out, QueryStats* stats = nullptr);

}  // namespace dpss
