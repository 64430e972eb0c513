#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dpss/exact_arith.hpp"
#include "dpss/item_io.hpp"
#include "dpss/random.hpp"

namespace dpss {

inline constexpr double kDefaultZMax = 5.0;
inline constexpr std::uint64_t kDefaultTrials = 1'000'000;

/// Expected counts below this are tested with an exact binomial tail instead
/// of the normal band.
inline constexpr double kRareCount = 10.0;

struct FrequencyRow {
  std::string outcome;
  Rational expected;
  std::uint64_t observed = 0;
  std::uint64_t trials = 0;
  double z = 0.0;
  bool pass = false;
};

using FrequencyReport = std::vector<FrequencyRow>;

bool all_pass(const FrequencyReport& report);
std::size_t count_failures(const FrequencyReport& report);

/// outcome,expected,observed,trials,z,pass
void write_csv_header(std::ostream& out);
void write_csv(std::ostream& out, const FrequencyReport& report);

/// Two-sided test of `observed` successes out of `trials` against `expected`.
/// Normal band when both expected counts are >= kRareCount, otherwise an
/// exact binomial tail on the rarer side with the z_max-equivalent level; z is
/// then reported as the matching normal deviate.
FrequencyRow frequency_row(std::string outcome, const Rational& expected, std::uint64_t observed,
                           std::uint64_t trials, double z_max);

/// The definitional PSS sampler: one exact coin per item.
std::vector<std::uint64_t> oracle_pss(std::span<const Item> items, const QueryParams& params, RandomSource& src);

/// Fills `out` with the positions (0-based, distinct) of the sampled items.
using SubsetSampler = std::function<void(RandomSource&, std::vector<std::size_t>& out)>;
/// Makes an independent sampler per shard, so shards can run on threads.
using SubsetSamplerFactory = std::function<SubsetSampler()>;

struct SubsetReport {
  FrequencyReport marginals;
  FrequencyReport pairs;  // one row per pair a < b; expected = p_a p_b
  double mean_size = 0.0;
};

/// Trials are split into a fixed number of shards, each with its own seed
/// derived from `seed`, so results do not depend on `threads`.
inline constexpr unsigned kShards = 8;

/// Marginal frequencies against `expected` and, if `with_pairs`, the empirical
/// covariance of every indicator pair against 0. Pair covariance z uses the
/// plug-in standard error sqrt(pa(1-pa)pb(1-pb)/T); pairs whose expected
/// joint count is rare are tested by a binomial tail against T pa pb.
SubsetReport subset_test(const SubsetSamplerFactory& factory, std::span<const Rational> expected,
                         std::uint64_t trials, double z_max, std::uint64_t seed, bool with_pairs,
                         unsigned threads = 1);

FrequencyReport marginal_test(const SubsetSamplerFactory& factory, std::span<const Rational> expected,
                              std::uint64_t trials, double z_max, std::uint64_t seed, unsigned threads = 1);

/// Rows carry the covariance verdicts; expected is filled with 0.
FrequencyReport independence_test(const SubsetSamplerFactory& factory, std::size_t n_items, std::uint64_t trials,
                                  double z_max, std::uint64_t seed, unsigned threads = 1);

/// Sampler over outcomes 1..n. Outcomes outside that range are counted in an
/// "out-of-range" row that must stay at zero.
using ValueSampler = std::function<std::uint64_t(RandomSource&)>;

/// pmf[k-1] = Pr[k]. Outcomes whose expected count is below kRareCount are
/// pooled into one "tail" row.
FrequencyReport pmf_test(const ValueSampler& sampler, std::span<const Rational> pmf, std::uint64_t trials,
                         double z_max, std::uint64_t seed);

}  // namespace dpss
