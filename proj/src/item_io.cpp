#include "dpss/item_io.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "dpss/errors.hpp"

namespace dpss {

Rational parameterized_weight(const QueryParams& params, u128 total) {
  if (params.alpha.sign() < 0 || params.beta.sign() < 0) {
    throw std::invalid_argument("alpha and beta must be non-negative");
  }
  return params.alpha * Rational::from_int(from_u128(total)) + params.beta;
}

namespace {

u128 total_weight(std::span<const Item> items) {
  u128 total = 0;
  for (const auto& it : items) total += it.weight;
  return total;
}

}  // namespace

std::vector<Rational> inclusion_probabilities(std::span<const Item> items, const QueryParams& params) {
  const Rational w = parameterized_weight(params, total_weight(items));
  if (w.sign() <= 0) throw DegenerateQuery();
  std::vector<Rational> out;
  out.reserve(items.size());
  for (const auto& it : items) {
    const Rational p = Rational::from_u64(it.weight) / w;
    out.push_back(p > Rational(1) ? Rational(1) : p);
  }
  return out;
}

Rational expected_sample_size(std::span<const Item> items, const QueryParams& params) {
  const Rational w = parameterized_weight(params, total_weight(items));
  if (w.sign() <= 0) throw DegenerateQuery();
  // Items with w >= W contribute 1 each; the rest sum to (their total) / W.
  MultiWordInt certain = 0;
  u128 rest = 0;
  for (const auto& it : items) {
    if (Rational::from_u64(it.weight) >= w) ++certain;
    else rest += it.weight;
  }
  return Rational::from_int(certain) + Rational::from_int(from_u128(rest)) / w;
}

std::vector<Item> read_items(std::istream& in) {
  std::vector<Item> items;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail("expected <id>\\t<weight>");
    Item it{};
    const char* b = line.data();
    const char* e = b + tab;
    auto r1 = std::from_chars(b, e, it.id);
    if (r1.ec != std::errc() || r1.ptr != e) fail("bad id");
    b = line.data() + tab + 1;
    e = line.data() + line.size();
    auto r2 = std::from_chars(b, e, it.weight);
    if (r2.ec != std::errc() || r2.ptr != e || b == e) fail("bad weight");
    if (it.weight >= (std::uint64_t{1} << 63)) fail("weight must be below 2^63");
    if (!seen.insert(it.id).second) fail("duplicate id " + std::to_string(it.id));
    items.push_back(it);
  }
  return items;
}

std::vector<Item> read_items_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return read_items(in);
}

void write_items(std::ostream& out, std::span<const Item> items) {
  for (const auto& it : items) out << it.id << '\t' << it.weight << '\n';
}

}  // namespace dpss
