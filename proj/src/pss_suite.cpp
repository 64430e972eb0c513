#include "dpss/pss_suite.hpp"

#include <algorithm>
#include <filesystem>
#include <memory>
#include <unordered_map>

namespace dpss {

std::vector<NamedInstance> load_instances(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".tsv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedInstance> out;
  for (const auto& f : files) out.push_back(NamedInstance{f.stem().string(), read_items_file(f.string())});
  return out;
}

std::vector<PssSetting> standard_settings(std::span<const Item> items) {
  u128 total = 0;
  std::vector<std::uint64_t> positive;
  for (const auto& it : items) {
    total += it.weight;
    if (it.weight != 0) positive.push_back(it.weight);
  }
  std::sort(positive.begin(), positive.end());
  const std::uint64_t median = positive.empty() ? 1 : positive[positive.size() / 2];
  const Rational t = Rational::from_int(from_u128(total));
  auto q = [](Rational a, Rational b) { return QueryParams{std::move(a), std::move(b)}; };
  // With W = 2^33 total every level-1 group lies at or below j1 for log2 N <= 8
  // (n0 <= 2^32): the top bucket is <= log2 total and j1 >= (log2 W - 2L)/L - 2.
  return {
      {"certain", q(Rational(0), Rational(1))},
      {"insignificant", q(Rational(0), mul_pow2(t, 33))},
      {"mu1", q(Rational(1), Rational(0))},
      {"quarter", q(Rational::parse("1/4"), Rational(0))},
      {"median", q(Rational(0), Rational::from_u64(median))},
  };
}

SubsetSamplerFactory halt_sampler_factory(std::vector<Item> items, QueryParams params, HaltOptions options) {
  auto shared = std::make_shared<const std::vector<Item>>(std::move(items));
  return [shared, params, options] {
    auto h = std::make_shared<Halt>(*shared, options);
    auto pos = std::make_shared<std::unordered_map<std::uint64_t, std::size_t>>();
    for (std::size_t k = 0; k < shared->size(); ++k) pos->emplace((*shared)[k].id, k);
    auto ids = std::make_shared<std::vector<std::uint64_t>>();
    return SubsetSampler([h, pos, ids, params](RandomSource& src, std::vector<std::size_t>& out) {
      ids->clear();
      h->query(params, src, *ids);
      for (auto id : *ids) out.push_back(pos->at(id));
    });
  };
}

PssCaseResult run_pss_case(const NamedInstance& inst, const PssSetting& setting, std::uint64_t trials,
                           double z_max, std::uint64_t seed, bool with_pairs, unsigned threads,
                           HaltOptions options) {
  const auto expected = inclusion_probabilities(inst.items, setting.params);
  PssCaseResult r{inst.name, setting.label, {}};
  r.report = subset_test(halt_sampler_factory(inst.items, setting.params, options), expected, trials, z_max, seed,
                         with_pairs, threads);
  return r;
}

void write_case_csv(std::ostream& out, const PssCaseResult& r) {
  const std::string prefix = r.instance + "/" + r.setting + "/";
  for (const auto* rows : {&r.report.marginals, &r.report.pairs}) {
    FrequencyReport named = *rows;
    for (auto& row : named) row.outcome = prefix + row.outcome;
    write_csv(out, named);
  }
}

}  // namespace dpss
