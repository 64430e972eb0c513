#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "dpss/random.hpp"
#include "dpss/samplers.hpp"

namespace dpss {

/// An item of weight 2^exponent.
struct PowerItem {
  std::uint64_t id;
  std::uint64_t exponent;
};

/// Deletion-only DPSS over power-of-two weights with distinct exponents,
/// answering PSS queries with parameters (1, 0): item x is sampled with
/// probability 2^a(x) / W, W = sum of 2^a.
///
/// Items are kept sorted by exponent, largest first. Distinct exponents make
/// that list the binary expansion of W, so no dense W is ever formed.
class ReferenceFloatDPSS {
 public:
  /// Throws std::invalid_argument on repeated ids or exponents.
  explicit ReferenceFloatDPSS(std::span<const PowerItem> items);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  bool contains(std::uint64_t id) const { return exponent_of_.count(id) != 0; }
  /// Largest first.
  const std::vector<PowerItem>& items() const { return items_; }

  /// Throws std::invalid_argument for an unknown id.
  void erase(std::uint64_t id);

  /// Appends the sample to `out` in descending exponent order. Throws
  /// InvalidState when empty.
  void query(RandomSource& src, std::vector<PowerItem>& out);
  std::vector<PowerItem> query(RandomSource& src);

  /// Exact coins for the top R = 2 ceil(log2 N) + 1 items; the rest share one
  /// skip pass at rate 2^(-2 ceil(log2 N)) <= 1/N^2.
  std::size_t exact_prefix() const;

 private:
  // Ber(2^-d / s) where s = W / 2^top lies in [1, 2).
  bool coin(LazyUniform& u, std::uint64_t d);
  void refresh_scaled_total();

  std::vector<PowerItem> items_;
  std::unordered_map<std::uint64_t, std::uint64_t> exponent_of_;
  bool scaled_fresh_ = false;
  u128 s63_ = 0;  // floor(s * 2^63)
  std::vector<std::unique_ptr<BoundedGeometric>> skip_;  // by ceil(log2 N)
};

struct SortStats {
  std::uint64_t n = 0;
  std::uint64_t queries = 0;
  std::uint64_t sampled = 0;          // total |T| over all queries
  double sampled_sq = 0;              // sum of |T|^2
  double queries_sq = 0;              // sum over iterations of (queries in it)^2
  std::uint64_t swaps = 0;            // insertion-sort swaps

  double mean_queries_per_iteration() const;
  double mean_sample_size() const;
  /// Standard errors of the two means, from the sample variances.
  double queries_se() const;
  double sample_size_se() const;
};

/// Sorts distinct integers in descending order by repeatedly querying a
/// ReferenceFloatDPSS over weights 2^v until the sample is non-empty, deleting
/// the largest sampled item and inserting its value by insertion sort from the
/// back of the output. Throws std::invalid_argument on duplicates.
std::vector<std::uint64_t> sort_via_dpss(std::span<const std::uint64_t> values, RandomSource& src,
                                         SortStats* stats = nullptr);

}  // namespace dpss
