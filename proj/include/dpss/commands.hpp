#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dpss/item_io.hpp"

namespace dpss {

/// Each command writes its result to `out`, diagnostics and timings to `err`,
/// and returns the process exit status (0 exactly when every check passed).

/// Builds a HALT from the item file, runs one query and prints "# mu=<exact>"
/// followed by the sampled ids, one per line.
int cmd_query(const std::string& file, const std::string& alpha, const std::string& beta, std::uint64_t seed,
              std::ostream& out, std::ostream& err);

struct VerifyOptions {
  std::string suite;        // samplers, pss, table, sorted-set
  std::uint64_t seed = 1;
  std::uint64_t trials = 1'000'000;
  unsigned threads = 1;
  std::string items;        // pss: item file
};

/// CSV report (outcome,expected,observed,trials,z,pass) on `out`.
int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err);

struct BenchRecord {
  std::string op;
  std::uint64_t n = 0;
  std::string params;
  std::uint64_t trials = 0;
  double mean_ns = 0;
  double median_ns = 0;
  double max_ns = 0;
  double round_max_median_ns = 0;  // median over rounds of the per-round maximum
  double mu = 0;
};

void write_bench_header(std::ostream& out);
void write_bench(std::ostream& out, const BenchRecord& r);

/// Mean query time across a beta sweep (alpha = 0) spanning mu from about 0
/// to n, plus the all-certain query. About `budget` sampled items per setting.
std::vector<BenchRecord> bench_query(std::uint64_t n, std::uint64_t seed, std::uint64_t budget);
/// Balanced delete/insert pairs on a structure of n items after a warm-up;
/// every single update is timed.
BenchRecord bench_update(std::uint64_t n, std::uint64_t seed, unsigned rounds, std::uint64_t per_round);
/// Construction from n items, repeated `reps` times.
BenchRecord bench_build(std::uint64_t n, std::uint64_t seed, unsigned reps);
/// Audited words per item.
double words_per_item(std::uint64_t n, std::uint64_t seed);

/// n random items with weights of 1 to 62 random bits, ids 0..n-1.
std::vector<Item> synthetic_items(std::uint64_t n, std::uint64_t seed);

struct BenchOptions {
  std::string kind;  // query, update, build
  std::vector<std::uint64_t> sizes;
  std::uint64_t seed = 1;
  unsigned reps = 5;
  std::uint64_t per_round = 100;  // update: delete+insert pairs per round
};
int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err);

struct SortDemoResult {
  bool correct = false;
  bool retries_ok = false;
  bool sample_size_ok = false;
  bool swaps_ok = false;
  bool pass() const { return correct && retries_ok && sample_size_ok && swaps_ok; }
};

/// Sorts n random distinct integers in [0, max_exponent] through the
/// reduction and prints the verdict, an output digest and the counters.
SortDemoResult run_sort_demo(std::uint64_t n, std::uint64_t max_exponent, std::uint64_t seed, std::ostream& out,
                             std::ostream& err);
int cmd_sort_demo(std::uint64_t n, std::uint64_t max_exponent, std::uint64_t seed, std::ostream& out,
                  std::ostream& err);

}  // namespace dpss
