// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status 0 exactly when all pass. Tolerances are fixed below.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dpss/commands.hpp"
#include "dpss/errors.hpp"
#include "dpss/halt.hpp"
#include "dpss/pss_suite.hpp"
#include "dpss/random.hpp"
#include "dpss/suites.hpp"

using namespace dpss;

namespace {

constexpr std::uint64_t kSeed = 20240601;
constexpr std::uint64_t kTrials = 1'000'000;
constexpr double kZ = 5.0;
constexpr double kBuildBand = 2.0;      // 6a: max/min of time per item
constexpr double kUpdateBand = 3.0;     // 6b: max/min of the update latency statistic
constexpr double kFitResidual = 0.20;   // 6c: max |residual| / mean latency
constexpr double kWordsPerItem = 64.0;  // 6d: C
constexpr std::uint64_t kSizes[] = {10'000, 100'000, 1'000'000};

int failures = 0;

void verdict(const char* id, const char* what, bool ok, const std::string& detail) {
  std::printf("[%s] %s %s: %s\n", ok ? "PASS" : "FAIL", id, what, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

void report_counts(const std::vector<NamedReport>& reports, std::size_t& rows, std::size_t& bad) {
  for (const auto& r : reports) {
    rows += r.rows.size();
    for (const auto& row : r.rows) {
      if (row.pass) continue;
      ++bad;
      std::fprintf(stderr, "  failing row %s/%s z=%.2f\n", r.name.c_str(), row.outcome.c_str(), row.z);
    }
  }
}

void criterion_samplers() {
  const auto reports = sampler_suite(kTrials, kSeed, kZ);
  std::size_t rows = 0, bad = 0;
  report_counts(reports, rows, bad);
  verdict("1", "sampler exactness", bad == 0,
          format("%zu parameter sets, %zu/%zu outcomes within 5 sigma", reports.size(), rows - bad, rows));
}

void criterion_tgeo() {
  const auto r = tgeo_half_two(kTrials, derive_seed(kSeed, 1), kZ);
  std::string detail;
  for (const auto& row : r.rows) {
    detail += format("Pr[%s]=%.6f (z=%.2f) ", row.outcome.c_str(),
                     static_cast<double>(row.observed) / static_cast<double>(row.trials), row.z);
  }
  verdict("2", "tgeo(1/2, 2) = (2/3, 1/3)", r.pass(), detail);
}

void criterion_pss() {
  const auto instances = load_instances(DPSS_FIXTURE_DIR);
  std::size_t cases = 0, bad_cases = 0, rows = 0, bad_rows = 0, min_settings = ~std::size_t{0};
  std::uint64_t stream = 0;
  for (const auto& inst : instances) {
    const auto settings = standard_settings(inst.items);
    min_settings = std::min(min_settings, settings.size());
    for (const auto& s : settings) {
      const auto r = run_pss_case(inst, s, kTrials, kZ, derive_seed(kSeed, 100 + stream++), true);
      ++cases;
      rows += r.report.marginals.size() + r.report.pairs.size();
      const auto bad = count_failures(r.report.marginals) + count_failures(r.report.pairs);
      bad_rows += bad;
      if (bad != 0) {
        ++bad_cases;
        std::fprintf(stderr, "  failing case %s/%s: %zu rows\n", inst.name.c_str(), s.label.c_str(), bad);
      }
    }
  }
  const bool ok = instances.size() >= 20 && min_settings >= 5 && bad_cases == 0;
  verdict("3", "PSS end-to-end exactness", ok,
          format("%zu instances x >= %zu settings, %zu cases, %zu/%zu marginal and pair rows within 5 sigma",
                 instances.size(), min_settings, cases, rows - bad_rows, rows));
}

// Grows from 1000 items to about 21000 and back, so global rebuilds happen,
// with a query every 10 updates and a full audit every 10^4.
std::string audit_run(RebuildMode mode, bool& ok) {
  HaltOptions options;
  options.rebuild_mode = mode;
  RandomSource gen(derive_seed(kSeed, 2 + static_cast<unsigned>(mode)));
  auto random_weight = [&] {
    if (gen.below(50) == 0) return std::uint64_t{0};
    const auto bits = static_cast<unsigned>(1 + gen.below(63));
    return (gen.next_word() >> (64 - bits)) | (std::uint64_t{1} << (bits - 1));
  };
  std::vector<Item> start;
  for (std::uint64_t id = 0; id < 1000; ++id) start.push_back({id, random_weight()});
  Halt h(start, options);
  std::uint64_t next_id = start.size();
  h.audit();
  unsigned audits = 1, max_width = 0;
  std::vector<std::uint64_t> out;
  constexpr std::uint64_t kUpdates = 100'000;
  for (std::uint64_t u = 1; u <= kUpdates; ++u) {
    const std::uint64_t insert_pct = u <= kUpdates / 2 ? 60 : 40;
    if (h.size() == 0 || gen.below(100) < insert_pct) {
      h.insert(next_id++, random_weight());
    } else {
      h.erase(h.items()[gen.below(h.size())].id);
    }
    if (u % 10 == 0 && h.total_weight() != 0) {
      const Rational total = Rational::from_int(from_u128(h.total_weight()));
      const auto target = Rational::from_u64(std::uint64_t{1} << gen.below(12));
      const QueryParams q = gen.below(2) == 0 ? QueryParams{Rational(0), total / target}
                                              : QueryParams{Rational(MultiWordInt(1), MultiWordInt(1 + gen.below(4))), Rational(0)};
      out.clear();
      h.query(q, gen, out);
    }
    if (u % 10'000 == 0) {
      const auto a = h.audit();
      ++audits;
      max_width = std::max(max_width, a.max_adapter_width);
      if (a.max_adapter_width > a.adapter_bound) ok = false;
    }
  }
  if (h.stats().max_significant_groups > 3) ok = false;
  return format("%s: %u audits, %llu rebuilds, n=%zu, max adapter width %u <= %u, max significant groups %llu",
                mode == RebuildMode::Amortized ? "amortized" : "de-amortized", audits,
                static_cast<unsigned long long>(h.rebuild_count()), h.size(), max_width, h.params().adapter_bound,
                static_cast<unsigned long long>(h.stats().max_significant_groups));
}

void criterion_audits() {
  bool ok = true;
  std::string detail;
  try {
    detail = audit_run(RebuildMode::Amortized, ok) + "; " + audit_run(RebuildMode::Deamortized, ok);
  } catch (const std::exception& e) {
    ok = false;
    detail = e.what();
  }
  verdict("4", "structural audits", ok, detail);
}

void criterion_table() {
  const auto reports = table_suite();
  std::size_t rows = 0, bad = 0;
  report_counts(reports, rows, bad);
  verdict("5", "lookup-table exactness", bad == 0,
          format("%zu tables with (m+1)^K <= 10^4, %zu/%zu rows with exact multiplicities", reports.size(),
                 rows - bad, rows));
}

double spread(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

void criterion_complexity() {
  std::vector<double> per_item, update, words;
  std::string build_detail, update_detail, words_detail;
  for (auto n : kSizes) {
    const auto b = bench_build(n, kSeed, 5);
    per_item.push_back(b.median_ns / static_cast<double>(n));
    build_detail += format("n=%llu %.0f ns/item ", static_cast<unsigned long long>(n), per_item.back());
    const auto u = bench_update(n, kSeed, 1000, 100);
    update.push_back(u.round_max_median_ns);
    update_detail += format("n=%llu %.0f ns ", static_cast<unsigned long long>(n), update.back());
    words.push_back(words_per_item(n, kSeed));
    words_detail += format("n=%llu %.2f ", static_cast<unsigned long long>(n), words.back());
  }
  verdict("6a", "build time linear", spread(per_item) <= kBuildBand,
          build_detail + format("(spread %.2f, band %.1f)", spread(per_item), kBuildBand));
  verdict("6b", "update latency flat", spread(update) <= kUpdateBand,
          "median over 1000 rounds of the max of 200 updates, thread CPU time: " + update_detail +
              format("(spread %.2f, band %.1f)", spread(update), kUpdateBand));

  const auto recs = bench_query(100'000, kSeed, 2'000'000);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : recs) {
    const double x = 1 + r.mu;
    sx += x;
    sy += r.mean_ns;
    sxx += x * x;
    sxy += x * r.mean_ns;
  }
  const double k = static_cast<double>(recs.size());
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double icept = (sy - slope * sx) / k;
  const double mean = sy / k;
  double worst = 0, per_unit = 0;
  std::string points;
  for (const auto& r : recs) {
    const double res = r.mean_ns - (icept + slope * (1 + r.mu));
    worst = std::max(worst, std::abs(res));
    per_unit = std::max(per_unit, r.mean_ns / (1 + r.mu));
    points += format("mu=%.4g:%.0f ", r.mu, r.mean_ns);
  }
  verdict("6c", "query latency affine in 1+mu", worst < kFitResidual * mean,
          format("n=10^5, fit %.0f + %.1f(1+mu) ns, max |residual| %.0f = %.1f%% of mean %.0f; ", icept, slope,
                 worst, 100 * worst / mean, mean) +
              points + format("(max time/(1+mu) %.0f ns)", per_unit));

  const double max_words = *std::max_element(words.begin(), words.end());
  verdict("6d", "memory <= C n words", max_words <= kWordsPerItem,
          "words/item " + words_detail + format("(C = %.0f)", kWordsPerItem));
}

void criterion_sort() {
  std::ostringstream out, err;
  const auto r = run_sort_demo(10'000, std::uint64_t{1} << 20, kSeed, out, err);
  std::string detail = out.str();
  std::replace(detail.begin(), detail.end(), '\n', ' ');
  verdict("7", "sorting reduction", r.pass(), detail);
}

std::string suite_output(std::uint64_t seed) {
  std::ostringstream out, err;
  for (const char* suite : {"samplers", "sorted-set", "table"}) {
    VerifyOptions v;
    v.suite = suite;
    v.seed = seed;
    v.trials = 20'000;
    cmd_verify(v, out, err);
  }
  std::uint64_t stream = 0;
  for (const auto& inst : load_instances(DPSS_FIXTURE_DIR)) {
    for (const auto& s : standard_settings(inst.items)) {
      write_case_csv(out, run_pss_case(inst, s, 10'000, kZ, derive_seed(seed, stream++), true));
    }
  }
  run_sort_demo(2'000, std::uint64_t{1} << 20, seed, out, err);
  cmd_query(std::string(DPSS_FIXTURE_DIR) + "/items64.tsv", "1/4", "0", seed, out, err);
  cmd_query(std::string(DPSS_FIXTURE_DIR) + "/items64.tsv", "0", "1000", seed, out, err);
  return out.str();
}

void criterion_reproducible() {
  const auto a = suite_output(kSeed);
  const auto b = suite_output(kSeed);
  const auto c = suite_output(kSeed + 1);
  verdict("8", "reproducibility", a == b && a != c,
          format("two runs with one seed: %zu bytes, %s; another seed differs: %s", a.size(),
                 a == b ? "identical" : "DIFFERENT", a != c ? "yes" : "NO"));
}

}  // namespace

int main(int argc, char** argv) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const std::pair<const char*, void (*)()> steps[] = {
      {"1", criterion_samplers}, {"2", criterion_tgeo},  {"3", criterion_pss},  {"4", criterion_audits},
      {"5", criterion_table},    {"6", criterion_complexity}, {"7", criterion_sort}, {"8", criterion_reproducible},
  };
  const std::vector<std::string> only(argv + 1, argv + argc);  // criterion numbers; empty runs all
  for (const auto& [id, step] : steps) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t = Clock::now();
    try {
      step();
    } catch (const std::exception& e) {
      verdict(id, "aborted", false, e.what());
    }
    std::fprintf(stderr, "  criterion %s took %.1f s\n", id,
                 std::chrono::duration<double>(Clock::now() - t).count());
  }
  std::printf("%s: %d failing criteria, %.0f s\n", failures == 0 ? "ALL PASS" : "FAILURES", failures,
              std::chrono::duration<double>(Clock::now() - start).count());
  return failures == 0 ? 0 : 1;
}
