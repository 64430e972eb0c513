#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>

#include "dpss/errors.hpp"
#include "dpss/halt.hpp"
#include "dpss/pss_suite.hpp"
#include "dpss/verification.hpp"

using namespace dpss;

namespace {

Rational R(const char* s) { return Rational::parse(s); }
QueryParams Q(const char* a, const char* b) { return QueryParams{R(a), R(b)}; }

std::vector<Item> random_items(RandomSource& gen, std::size_t n, unsigned max_bits, std::uint64_t first_id = 0) {
  std::vector<Item> items;
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned bits = 1 + static_cast<unsigned>(gen.below(max_bits));
    items.push_back({first_id + k, 1 + (gen.next_word() >> (64 - bits))});
  }
  return items;
}

// Least m >= 2 with 2^(2^m) >= n.
unsigned oracle_m(std::uint64_t n) {
  for (unsigned m = 2;; ++m) {
    if ((1u << m) >= 64 || (std::uint64_t{1} << (1u << m)) >= n) return m;
  }
}

// Least K >= 1 with 2^K >= m^2.
unsigned oracle_k(unsigned m) {
  unsigned k = 1;
  while ((1u << k) < m * m) ++k;
  return k;
}

// Cells of a K-slot table packed floor(64/K) per word.
long double oracle_words(unsigned k, unsigned m) {
  long double cells = 1;
  for (unsigned j = 0; j < k; ++j) cells *= static_cast<long double>(m + 1) * m * m;
  const long double per_word = 64 / k;
  return std::ceil(cells / per_word);
}

void check_subset(const std::vector<Item>& items, const QueryParams& q, HaltOptions opt, std::uint64_t trials,
                  std::uint64_t seed) {
  const auto expected = inclusion_probabilities(items, q);
  const auto report = subset_test(halt_sampler_factory(items, q, opt), expected, trials, kDefaultZMax, seed, true);
  for (const auto& r : report.marginals) {
    INFO(r.outcome, " expected ", r.expected.to_double(), " observed ", r.observed, " z ", r.z);
    CHECK(r.pass);
  }
  for (const auto& r : report.pairs) {
    INFO(r.outcome, " z ", r.z);
    CHECK(r.pass);
  }
}

std::vector<Item> survivors(const Halt& h) { return {h.items().begin(), h.items().end()}; }

// Random inserts and deletes, balanced around the current size.
void churn(Halt& h, RandomSource& gen, std::uint64_t updates, std::uint64_t& next_id, unsigned max_bits) {
  for (std::uint64_t u = 0; u < updates; ++u) {
    if (h.size() > 0 && gen.below(2) == 0) {
      h.erase(h.items()[gen.below(h.size())].id);
    } else {
      const unsigned bits = 1 + static_cast<unsigned>(gen.below(max_bits));
      h.insert(next_id++, gen.below(8) == 0 ? 0 : 1 + (gen.next_word() >> (64 - bits)));
    }
  }
}

}  // namespace

TEST_CASE("parameters for representative sizes") {
  unsetenv("DPSS_TABLE_BUDGET_WORDS");
  struct Row {
    std::uint64_t n0, n1, n2;
    unsigned m, k_full, k_table;
  };
  for (const Row& r : {Row{10'000, 65536, 16, 4, 4, 3}, Row{1'000'000, 1u << 20, 32, 5, 5, 3}, Row{64, 256, 8, 3, 4, 2},
                       Row{16, 16, 4, 2, 2, 2}, Row{3, 16, 4, 2, 2, 2}, Row{0, 16, 4, 2, 2, 2}}) {
    const HaltParams p = halt_params(r.n0, std::nullopt);
    INFO("n0 = ", r.n0);
    CHECK(p.n1 == r.n1);
    CHECK(p.n2 == r.n2);
    CHECK(p.m == r.m);
    CHECK(p.k_full == r.k_full);
    CHECK(p.k_table == r.k_table);
  }
}

TEST_CASE("parameters against independent characterizations") {
  unsetenv("DPSS_TABLE_BUDGET_WORDS");
  RandomSource gen(11);
  std::vector<std::uint64_t> sizes = {1, 15, 16, 17, 255, 256, 257, 65535, 65536, 65537, 1u << 20, (1u << 20) + 1};
  for (int k = 0; k < 200; ++k) sizes.push_back(1 + (gen.next_word() >> (4 + gen.below(40))));
  for (auto n0 : sizes) {
    INFO("n0 = ", n0);
    const HaltParams p = halt_params(n0, std::nullopt);
    const std::uint64_t eff = std::max<std::uint64_t>(n0, 16);
    CHECK(p.n0_eff == eff);
    // n1: power of 16, the least one >= n0_eff
    CHECK(p.n1 >= eff);
    CHECK((p.n1 / 16 < eff || p.n1 == 16));
    CHECK((std::uint64_t{1} << p.log_n1) == p.n1);
    CHECK(p.log_n1 % 4 == 0);
    CHECK(p.n2 >= p.log_n1);
    CHECK(p.n2 / 2 < p.log_n1);
    CHECK(p.log_n2 <= p.m);
    CHECK(p.m == oracle_m(eff));
    CHECK(p.k_full == oracle_k(p.m));
    CHECK(p.adapter_bound == 2 * oracle_m(eff) + 1);
    CHECK(p.table_budget_words == 4 * eff);
    CHECK(p.k_table <= p.k_full);
    if (p.k_table > 0) CHECK(oracle_words(p.k_table, p.m) <= static_cast<long double>(p.table_budget_words));
    if (p.k_table < p.k_full) {
      CHECK(oracle_words(p.k_table + 1, p.m) > static_cast<long double>(p.table_budget_words));
    }
  }
}

TEST_CASE("table budget from option and environment") {
  unsetenv("DPSS_TABLE_BUDGET_WORDS");
  CHECK(halt_params(10'000, 0).k_table == 0);
  CHECK(halt_params(10'000, std::uint64_t{1} << 40).k_table == 4);
  setenv("DPSS_TABLE_BUDGET_WORDS", "0", 1);
  CHECK(halt_params(10'000, std::nullopt).k_table == 0);
  CHECK(halt_params(10'000, 40'000).k_table == 3);  // the option wins
  unsetenv("DPSS_TABLE_BUDGET_WORDS");
  CHECK_THROWS_AS(halt_params(std::uint64_t{1} << 60, std::nullopt), std::invalid_argument);
}

TEST_CASE("empty structure and argument errors") {
  Halt h;
  RandomSource src(1);
  CHECK(h.size() == 0);
  CHECK(h.query(Q("1", "0"), src).empty());
  CHECK(h.query(Q("0", "0"), src).empty());
  h.audit();
  CHECK_THROWS_AS(h.erase(5), std::invalid_argument);
  h.insert(5, 9);
  CHECK_THROWS_AS(h.insert(5, 1), std::invalid_argument);
  CHECK_THROWS_AS(h.insert(6, std::uint64_t{1} << 63), std::invalid_argument);
  CHECK_THROWS_AS(h.query(Q("0", "0"), src), DegenerateQuery);
  CHECK_THROWS_AS(h.query(Q("-1", "4"), src), std::invalid_argument);
  CHECK(h.weight(5) == 9);
  h.erase(5);
  CHECK(h.size() == 0);
  h.rebuild();
  h.audit();
  CHECK(h.query(Q("1", "0"), src).empty());

  Halt zeros;
  zeros.insert(1, 0);
  zeros.insert(2, 0);
  CHECK_THROWS_AS(zeros.query(Q("1", "0"), src), DegenerateQuery);
  CHECK(zeros.query(Q("1", "1"), src).empty());
  CHECK(zeros.audit().zero_weight_items == 2);
}

TEST_CASE("single item and the {4, 4} joint law") {
  RandomSource src(2);
  std::vector<Item> one{{7, 4}};
  Halt h1(one);
  for (int t = 0; t < 1000; ++t) CHECK(h1.query(Q("0", "4"), src) == std::vector<std::uint64_t>{7});

  // W = 16: each item independently with probability 1/4.
  std::vector<Item> two{{1, 4}, {2, 4}};
  auto h2 = std::make_shared<Halt>(two);
  const std::vector<Rational> pmf = {R("9/16"), R("3/16"), R("3/16"), R("1/16")};
  const auto report = pmf_test(
      [h2](RandomSource& s) {
        std::uint64_t mask = 0;
        for (auto id : h2->query(Q("0", "16"), s)) mask |= id;
        return mask + 1;
      },
      pmf, kDefaultTrials, kDefaultZMax, 3);
  for (const auto& r : report) {
    INFO(r.outcome, " z ", r.z);
    CHECK(r.pass);
  }
}

TEST_CASE("certain and vanishing regimes") {
  RandomSource gen(3);
  auto items = random_items(gen, 3000, 50);
  items.push_back({999'999, 0});
  Halt h(items);
  RandomSource src(4);
  std::set<std::uint64_t> positive;
  for (const auto& it : items) {
    if (it.weight != 0) positive.insert(it.id);
  }
  for (int t = 0; t < 20; ++t) {
    auto out = h.query(Q("0", "1"), src);
    CHECK(std::set<std::uint64_t>(out.begin(), out.end()) == positive);
    CHECK(out.size() == positive.size());
  }
  // mu <= 1/N^2 per query: nonempty in at most a handful of 2000 queries.
  const Rational huge = Rational::from_int(from_u128(h.total_weight())) * Rational(1u << 30);
  int nonempty = 0;
  for (int t = 0; t < 2000; ++t) nonempty += h.query(QueryParams{R("0"), huge}, src).empty() ? 0 : 1;
  CHECK(nonempty <= 2);
}

TEST_CASE("audits after build and after updates, both rebuild modes") {
  for (auto mode : {RebuildMode::Amortized, RebuildMode::Deamortized}) {
    INFO("deamortized = ", mode == RebuildMode::Deamortized);
    RandomSource gen(5);
    auto items = random_items(gen, 10'000, 62);
    HaltOptions opt;
    opt.rebuild_mode = mode;
    Halt h(items, opt);
    const HaltAudit a = h.audit();
    CHECK(a.items == 10'000);
    CHECK(a.max_adapter_width <= a.adapter_bound);
    CHECK(a.max_final_count <= h.params().m);
    CHECK(a.max_final_items <= h.params().log_n2);
    std::uint64_t next = 1'000'000;
    bool saw_migration = false;
    for (int round = 0; round < 100; ++round) {
      churn(h, gen, 1000, next, 62);
      saw_migration = saw_migration || h.migrating();
      const HaltAudit b = h.audit();
      CHECK(b.max_adapter_width <= b.adapter_bound);
      CHECK(b.max_final_count <= h.params().m);
    }
    // Shrink far enough to force rebuilds, with queries in between.
    RandomSource src(6);
    while (h.size() > 500) {
      h.erase(h.items()[gen.below(h.size())].id);
      saw_migration = saw_migration || h.migrating();
      if (h.size() % 997 == 0) {
        h.audit();
        h.query(Q("1/2", "0"), src);
      }
    }
    h.audit();
    CHECK(h.rebuild_count() > 0);
    if (mode == RebuildMode::Deamortized) CHECK(saw_migration);
  }
}

TEST_CASE("insert then delete restores the audit") {
  RandomSource gen(7);
  auto items = random_items(gen, 5000, 40);
  Halt h(items);
  const HaltAudit before = h.audit();
  const u128 total = h.total_weight();
  std::array<std::size_t, BGStructure::kBuckets> sizes{};
  for (unsigned i = 0; i < BGStructure::kBuckets; ++i) sizes[i] = h.level1().bucket_size(i);
  for (int k = 0; k < 200; ++k) {
    const std::uint64_t w = 1 + gen.below(std::uint64_t{1} << 40);
    h.insert(77'000'000 + k, w);
    h.erase(77'000'000 + k);
    CHECK(h.audit() == before);
  }
  for (unsigned i = 0; i < BGStructure::kBuckets; ++i) CHECK(h.level1().bucket_size(i) == sizes[i]);
  CHECK(h.total_weight() == total);
}

TEST_CASE("marginals and pairs on fixtures, table and direct final level") {
  const auto fixtures = load_instances(DPSS_FIXTURE_DIR);
  REQUIRE(fixtures.size() >= 20);
  std::uint64_t seed = 100;
  for (const char* name : {"items64", "12_boundaries40", "19_one_bucket63", "22_mixed64", "02_pair_equal"}) {
    const auto it = std::find_if(fixtures.begin(), fixtures.end(), [&](const auto& f) { return f.name == name; });
    REQUIRE(it != fixtures.end());
    for (const auto& s : standard_settings(it->items)) {
      for (auto mode : {FinalLevelMode::Table, FinalLevelMode::Direct}) {
        INFO(name, " ", s.label, " table = ", mode == FinalLevelMode::Table);
        HaltOptions opt;
        opt.final_mode = mode;
        check_subset(it->items, s.params, opt, 100'000, ++seed);
      }
    }
  }
}

TEST_CASE("final level paths are exercised") {
  const auto fixtures = load_instances(DPSS_FIXTURE_DIR);
  const auto it = std::find_if(fixtures.begin(), fixtures.end(), [](const auto& f) { return f.name == "items64"; });
  REQUIRE(it != fixtures.end());
  RandomSource src(9);
  std::map<bool, QueryStats> seen;
  for (auto mode : {FinalLevelMode::Table, FinalLevelMode::Direct}) {
    HaltOptions opt;
    opt.final_mode = mode;
    Halt h(it->items, opt);
    for (const auto& s : standard_settings(it->items)) {
      for (int t = 0; t < 20'000; ++t) h.query(s.params, src);
    }
    seen[mode == FinalLevelMode::Table] = h.stats();
  }
  CHECK(seen[true].table_samples > 0);
  CHECK(seen[true].table_accepts > 0);
  CHECK(seen[false].table_samples == 0);
  CHECK(seen[false].direct_slots > 0);
  CHECK(seen[true].final_level_calls > 0);
  CHECK(seen[true].max_significant_groups <= 3);
}

TEST_CASE("no table at all still samples exactly") {
  RandomSource gen(10);
  auto items = random_items(gen, 48, 30);
  HaltOptions opt;
  opt.table_budget_words = 0;
  Halt h(items, opt);
  CHECK(h.params().k_table == 0);
  check_subset(items, Q("1/3", "0"), opt, 100'000, 12);
}

TEST_CASE("survivor set after 10^5 updates") {
  for (auto mode : {RebuildMode::Amortized, RebuildMode::Deamortized}) {
    RandomSource gen(13);
    HaltOptions opt;
    opt.rebuild_mode = mode;
    Halt h(random_items(gen, 2000, 45), opt);
    std::uint64_t next = 10'000'000;
    churn(h, gen, 100'000, next, 45);
    while (h.size() > 64) h.erase(h.items()[gen.below(h.size())].id);
    h.audit();
    const auto live = survivors(h);
    auto shared = std::make_shared<Halt>(std::move(h));
    std::unordered_map<std::uint64_t, std::size_t> pos;
    for (std::size_t k = 0; k < live.size(); ++k) pos[live[k].id] = k;
    for (const auto& q : {Q("1/4", "0"), Q("0", "1000000000")}) {
      // One structure, so sample on a single shard sequence.
      const auto report = subset_test(
          [&] {
            return SubsetSampler([&, shared](RandomSource& src, std::vector<std::size_t>& out) {
              for (auto id : shared->query(q, src)) out.push_back(pos.at(id));
            });
          },
          inclusion_probabilities(live, q), 100'000, kDefaultZMax, 14, true);
      CHECK(all_pass(report.marginals));
      CHECK(all_pass(report.pairs));
    }
  }
}

TEST_CASE("rebuild keeps the law") {
  RandomSource gen(15);
  auto items = random_items(gen, 40, 35);
  Halt h(items);
  for (int k = 0; k < 30; ++k) h.insert(500 + k, 1 + gen.below(1u << 20));
  for (int k = 0; k < 30; ++k) h.erase(500 + k);
  const auto before = h.rebuild_count();
  h.rebuild();
  CHECK(h.rebuild_count() == before + 1);
  CHECK(h.params().n0 == 40);
  h.audit();
  const auto live = survivors(h);
  auto shared = std::make_shared<Halt>(std::move(h));
  std::unordered_map<std::uint64_t, std::size_t> pos;
  for (std::size_t k = 0; k < live.size(); ++k) pos[live[k].id] = k;
  const auto q = Q("1/2", "0");
  const auto report = subset_test(
      [&] {
        return SubsetSampler([&, shared](RandomSource& src, std::vector<std::size_t>& out) {
          for (auto id : shared->query(q, src)) out.push_back(pos.at(id));
        });
      },
      inclusion_probabilities(live, q), 100'000, kDefaultZMax, 16, true);
  CHECK(all_pass(report.marginals));
  CHECK(all_pass(report.pairs));
}

TEST_CASE("memory is linear") {
  RandomSource gen(17);
  std::vector<double> per_item;
  for (std::size_t n : {1000u, 10'000u, 100'000u}) {
    Halt h(random_items(gen, n, 62));
    per_item.push_back(static_cast<double>(h.resident_words()) / static_cast<double>(n));
  }
  for (double r : per_item) CHECK(r < 64);
}
