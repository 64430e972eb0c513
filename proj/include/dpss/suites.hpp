#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpss/verification.hpp"

namespace dpss {

struct NamedReport {
  std::string name;
  FrequencyReport rows;
  bool pass() const { return all_pass(rows); }
};

/// pmf tests of every sampler (ber_rational, ber_pstar, ber_half_inv_pstar,
/// both bgeo implementations, tgeo in all three cases) against exact
/// probabilities evaluated here from their definitions.
std::vector<NamedReport> sampler_suite(std::uint64_t trials, std::uint64_t seed, double z_max = kDefaultZMax);

/// tgeo(1/2, 2) against (2/3, 1/3).
NamedReport tgeo_half_two(std::uint64_t trials, std::uint64_t seed, double z_max = kDefaultZMax);

/// Every row of every table with (m+1)^K <= 10^4 (and a bounded cell count):
/// the number of cells holding each result equals Pr(r) (m^2)^K exactly.
/// Rows are one per (m, K), observed = mismatching (row, result) pairs.
std::vector<NamedReport> table_suite(std::uint64_t max_cells = 4'000'000);

/// Random operation sequences on BoundedIntSet checked against std::set;
/// observed = mismatches.
std::vector<NamedReport> sorted_set_suite(std::uint64_t ops, std::uint64_t seed);

void write_reports_csv(std::ostream& out, const std::vector<NamedReport>& reports);

}  // namespace dpss
