#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpss/halt.hpp"
#include "dpss/verification.hpp"

namespace dpss {

struct NamedInstance {
  std::string name;
  std::vector<Item> items;
};

/// Every *.tsv file of a directory, sorted by file name.
std::vector<NamedInstance> load_instances(const std::string& dir);

struct PssSetting {
  std::string label;
  QueryParams params;
};

/// Five (alpha, beta) settings derived from the instance: every positive item
/// certain, every item insignificant at level 1, mu = 1, mu near 4, and a mix
/// with the heavier half certain.
std::vector<PssSetting> standard_settings(std::span<const Item> items);

/// Each sampler owns its own HALT built from `items`; the sample is reported
/// as positions into `items`.
SubsetSamplerFactory halt_sampler_factory(std::vector<Item> items, QueryParams params, HaltOptions options = {});

struct PssCaseResult {
  std::string instance;
  std::string setting;
  SubsetReport report;
  bool pass() const { return all_pass(report.marginals) && all_pass(report.pairs); }
};

PssCaseResult run_pss_case(const NamedInstance& inst, const PssSetting& setting, std::uint64_t trials,
                           double z_max, std::uint64_t seed, bool with_pairs, unsigned threads = 1,
                           HaltOptions options = {});

/// CSV rows of one case, outcome prefixed by "instance/setting/".
void write_case_csv(std::ostream& out, const PssCaseResult& r);

}  // namespace dpss
