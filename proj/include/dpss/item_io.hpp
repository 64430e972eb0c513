#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dpss/exact_arith.hpp"

namespace dpss {

struct Item {
  std::uint64_t id;
  std::uint64_t weight;
};

/// Query parameters (alpha, beta), both non-negative rationals.
struct QueryParams {
  Rational alpha;
  Rational beta;
};

/// W_S(alpha, beta) = alpha * total + beta. Throws std::invalid_argument on
/// negative parameters.
Rational parameterized_weight(const QueryParams& params, u128 total);

/// Exact mu_S(alpha, beta) = sum of min{w/W, 1}. Throws DegenerateQuery when W = 0.
Rational expected_sample_size(std::span<const Item> items, const QueryParams& params);

/// Exact inclusion probability min{w/W, 1} of each item.
std::vector<Rational> inclusion_probabilities(std::span<const Item> items, const QueryParams& params);

/// Reads `<id>\t<weight>` lines (blank lines and lines starting with '#'
/// are skipped). Weights must be below 2^63 and ids unique. Throws
/// std::invalid_argument with the offending line number.
std::vector<Item> read_items(std::istream& in);
std::vector<Item> read_items_file(const std::string& path);
void write_items(std::ostream& out, std::span<const Item> items);

}  // namespace dpss
