#include "dpss/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <time.h>
#include <unordered_set>

#include "dpss/errors.hpp"
#include "dpss/halt.hpp"
#include "dpss/pss_suite.hpp"
#include "dpss/sort_reduction.hpp"
#include "dpss/suites.hpp"

namespace dpss {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ns(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::nano>(b - a).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

void summarize(BenchRecord& r, const std::vector<double>& ns) {
  r.trials = ns.size();
  r.mean_ns = ns.empty() ? 0 : std::accumulate(ns.begin(), ns.end(), 0.0) / static_cast<double>(ns.size());
  r.median_ns = median(ns);
  r.max_ns = ns.empty() ? 0 : *std::max_element(ns.begin(), ns.end());
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

int cmd_query(const std::string& file, const std::string& alpha, const std::string& beta, std::uint64_t seed,
              std::ostream& out, std::ostream& err) {
  try {
    const auto items = read_items_file(file);
    auto literal = [](const char* name, const std::string& text) {
      try {
        return Rational::parse(text);
      } catch (const std::exception&) {
        throw std::invalid_argument(std::string(name) + ": '" + text + "' is not an integer or p/q");
      }
    };
    const QueryParams q{literal("alpha", alpha), literal("beta", beta)};
    Halt h(items);
    RandomSource src(seed);
    const auto ids = h.query(q, src);
    const Rational mu = items.empty() ? Rational(0) : expected_sample_size(items, q).reduced();
    out << "# mu=" << mu.to_string() << "\n";
    for (auto id : ids) out << id << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  std::vector<NamedReport> reports;
  try {
    if (opt.suite == "samplers") {
      reports = sampler_suite(opt.trials, opt.seed);
      reports.push_back(tgeo_half_two(opt.trials, derive_seed(opt.seed, 1000)));
    } else if (opt.suite == "pss") {
      const NamedInstance inst{opt.items, read_items_file(opt.items)};
      std::uint64_t stream = 0;
      for (const auto& s : standard_settings(inst.items)) {
        const auto r = run_pss_case(inst, s, opt.trials, kDefaultZMax, derive_seed(opt.seed, stream++), true,
                                    opt.threads);
        reports.push_back({s.label + "/marginal", r.report.marginals});
        reports.push_back({s.label + "/pair", r.report.pairs});
      }
    } else if (opt.suite == "table") {
      reports = table_suite();
    } else if (opt.suite == "sorted-set") {
      reports = sorted_set_suite(opt.trials, opt.seed);
    } else {
      err << "error: unknown suite '" << opt.suite << "' (samplers, pss, table, sorted-set)\n";
      return 2;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  write_csv_header(out);
  write_reports_csv(out, reports);
  std::size_t rows = 0, failures = 0;
  for (const auto& r : reports) {
    rows += r.rows.size();
    failures += count_failures(r.rows);
  }
  err << opt.suite << ": " << rows - failures << "/" << rows << " rows pass\n";
  return failures == 0 ? 0 : 1;
}

void write_bench_header(std::ostream& out) {
  out << "op,n,params,trials,mean_ns,median_ns,max_ns,round_max_median_ns,mu\n";
}

void write_bench(std::ostream& out, const BenchRecord& r) {
  out << r.op << "," << r.n << "," << r.params << "," << r.trials << "," << fixed(r.mean_ns, 1) << ","
      << fixed(r.median_ns, 1) << "," << fixed(r.max_ns, 1) << "," << fixed(r.round_max_median_ns, 1) << ","
      << fixed(r.mu, 4) << "\n";
}

std::vector<Item> synthetic_items(std::uint64_t n, std::uint64_t seed) {
  RandomSource gen(seed);
  std::vector<Item> items(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    const auto bits = static_cast<unsigned>(1 + gen.below(62));
    items[k] = Item{k, 1 + (gen.next_word() >> (64 - bits))};
  }
  return items;
}

std::vector<BenchRecord> bench_query(std::uint64_t n, std::uint64_t seed, std::uint64_t budget) {
  const auto items = synthetic_items(n, seed);
  Halt h(items);
  const Rational total = Rational::from_int(from_u128(h.total_weight()));
  // beta = total / target gives mu <= target.
  std::vector<std::pair<std::string, QueryParams>> settings;
  for (const char* t : {"1/100", "1/10", "1", "10", "100", "1000", "10000", "100000", "1000000"}) {
    const Rational target = Rational::parse(t);
    if (target > Rational::from_u64(n)) break;
    settings.push_back({std::string("beta=W/") + t, QueryParams{Rational(0), total / target}});
  }
  settings.push_back({"beta=1", QueryParams{Rational(0), Rational(1)}});
  RandomSource src(derive_seed(seed, 1));
  std::vector<BenchRecord> out;
  std::vector<std::uint64_t> ids;
  for (const auto& [label, q] : settings) {
    BenchRecord r{"query", n, label};
    r.mu = expected_sample_size(items, q).to_double();
    const auto trials = std::clamp<std::uint64_t>(static_cast<std::uint64_t>(budget / (1 + r.mu)), 50, 200'000);
    for (int w = 0; w < 20; ++w) {
      ids.clear();
      h.query(q, src, ids);
    }
    std::vector<double> ns;
    ns.reserve(trials);
    for (std::uint64_t t = 0; t < trials; ++t) {
      ids.clear();
      const auto a = Clock::now();
      h.query(q, src, ids);
      ns.push_back(elapsed_ns(a, Clock::now()));
    }
    summarize(r, ns);
    out.push_back(r);
  }
  return out;
}

// Thread CPU time: wall-clock maxima on a shared host are dominated by preemption.
static double thread_cpu_ns() {
  timespec t{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &t);
  return static_cast<double>(t.tv_sec) * 1e9 + static_cast<double>(t.tv_nsec);
}

BenchRecord bench_update(std::uint64_t n, std::uint64_t seed, unsigned rounds, std::uint64_t per_round) {
  Halt h(synthetic_items(n, seed));
  RandomSource gen(derive_seed(seed, 2));
  std::uint64_t next_id = n;
  std::vector<double> all;
  std::vector<double> round_max;
  for (unsigned round = 0; round <= rounds; ++round) {  // round 0 warms up
    std::vector<double> ns;
    ns.reserve(2 * per_round);
    for (std::uint64_t k = 0; k < per_round; ++k) {
      const std::uint64_t victim = h.items()[gen.below(h.size())].id;
      const auto bits = static_cast<unsigned>(1 + gen.below(62));
      const std::uint64_t weight = 1 + (gen.next_word() >> (64 - bits));
      const double a = thread_cpu_ns();
      h.erase(victim);
      const double b = thread_cpu_ns();
      h.insert(next_id++, weight);
      const double c = thread_cpu_ns();
      ns.push_back(b - a);
      ns.push_back(c - b);
    }
    if (round == 0) continue;
    round_max.push_back(*std::max_element(ns.begin(), ns.end()));
    all.insert(all.end(), ns.begin(), ns.end());
  }
  BenchRecord r{"update", n, "balanced delete+insert"};
  summarize(r, all);
  r.round_max_median_ns = median(round_max);
  return r;
}

BenchRecord bench_build(std::uint64_t n, std::uint64_t seed, unsigned reps) {
  const auto items = synthetic_items(n, seed);
  std::vector<double> ns;
  for (unsigned k = 0; k < reps; ++k) {
    const auto a = Clock::now();
    Halt h(items);
    ns.push_back(elapsed_ns(a, Clock::now()));
  }
  BenchRecord r{"build", n, "random weights"};
  summarize(r, ns);
  return r;
}

double words_per_item(std::uint64_t n, std::uint64_t seed) {
  Halt h(synthetic_items(n, seed));
  return static_cast<double>(h.resident_words()) / static_cast<double>(std::max<std::uint64_t>(n, 1));
}

int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
  const std::vector<std::uint64_t> sizes =
      opt.sizes.empty() ? std::vector<std::uint64_t>{10'000, 100'000, 1'000'000} : opt.sizes;
  if (opt.kind != "query" && opt.kind != "update" && opt.kind != "build") {
    err << "error: unknown bench '" << opt.kind << "' (query, update, build)\n";
    return 2;
  }
  write_bench_header(out);
  for (auto n : sizes) {
    if (opt.kind == "query") {
      for (const auto& r : bench_query(n, opt.seed, 2'000'000)) write_bench(out, r);
    } else if (opt.kind == "update") {
      write_bench(out, bench_update(n, opt.seed, std::max(1u, opt.reps), opt.per_round));
    } else {
      write_bench(out, bench_build(n, opt.seed, std::max(1u, opt.reps)));
    }
  }
  return 0;
}

SortDemoResult run_sort_demo(std::uint64_t n, std::uint64_t max_exponent, std::uint64_t seed, std::ostream& out,
                             std::ostream& err) {
  if (n == 0) throw std::invalid_argument("sort-demo: n must be positive");
  if (max_exponent != ~std::uint64_t{0} && n > max_exponent + 1) {
    throw std::invalid_argument("sort-demo: n exceeds the number of distinct values in [0, max-exponent]");
  }
  RandomSource gen(seed);
  std::vector<std::uint64_t> values;
  values.reserve(n);
  const std::uint64_t range = max_exponent == ~std::uint64_t{0} ? 0 : max_exponent + 1;  // 0: all words
  if (range != 0 && range <= 4 * n) {
    std::vector<std::uint64_t> all(range);
    std::iota(all.begin(), all.end(), 0);
    for (std::uint64_t k = 0; k < n; ++k) std::swap(all[k], all[k + gen.below(range - k)]);
    values.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    std::unordered_set<std::uint64_t> seen;
    while (values.size() < n) {
      const std::uint64_t v = range == 0 ? gen.next_word() : gen.below(range);
      if (seen.insert(v).second) values.push_back(v);
    }
  }
  RandomSource src(derive_seed(seed, 1));
  SortStats st;
  const auto a = Clock::now();
  const auto sorted = sort_via_dpss(values, src, &st);
  const double ms = elapsed_ns(a, Clock::now()) / 1e6;
  auto oracle = values;
  std::sort(oracle.begin(), oracle.end(), std::greater<>());

  SortDemoResult r;
  r.correct = sorted == oracle;
  r.retries_ok = st.mean_queries_per_iteration() <= 2 + 5 * st.queries_se();
  r.sample_size_ok = std::abs(st.mean_sample_size() - 1) <= 5 * st.sample_size_se();
  r.swaps_ok = st.swaps <= 10 * st.n;
  std::uint64_t digest = 0xcbf29ce484222325ull;  // FNV-1a over the output words
  for (auto v : sorted) {
    for (int b = 0; b < 8; ++b) {
      digest ^= (v >> (8 * b)) & 0xffu;
      digest *= 0x100000001b3ull;
    }
  }
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016" PRIx64, digest);
  auto verdict = [](bool ok) { return ok ? "pass" : "FAIL"; };
  out << "n=" << n << "\nmax_exponent=" << max_exponent << "\nseed=" << seed << "\n";
  out << "sorted=" << (r.correct ? "correct" : "WRONG") << "\n";
  out << "digest=" << hex << "\n";
  out << "queries=" << st.queries << " mean_queries_per_iteration=" << fixed(st.mean_queries_per_iteration(), 6)
      << " se=" << fixed(st.queries_se(), 6) << " retries_ok=" << verdict(r.retries_ok) << "\n";
  out << "sampled=" << st.sampled << " mean_sample_size=" << fixed(st.mean_sample_size(), 6)
      << " se=" << fixed(st.sample_size_se(), 6) << " sample_size_ok=" << verdict(r.sample_size_ok) << "\n";
  out << "swaps=" << st.swaps << " swaps_per_item=" << fixed(static_cast<double>(st.swaps) / n, 4)
      << " swaps_ok=" << verdict(r.swaps_ok) << "\n";
  err << "wall_ms=" << fixed(ms, 1) << "\n";
  return r;
}

int cmd_sort_demo(std::uint64_t n, std::uint64_t max_exponent, std::uint64_t seed, std::ostream& out,
                  std::ostream& err) {
  try {
    return run_sort_demo(n, max_exponent, seed, out, err).pass() ? 0 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dpss
