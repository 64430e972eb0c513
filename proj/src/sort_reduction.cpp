#include "dpss/sort_reduction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dpss/errors.hpp"
#include "dpss/exact_arith.hpp"

namespace dpss {

namespace {

unsigned ceil_log2_size(std::size_t n) {
  unsigned c = 0;
  while ((std::size_t{1} << c) < n) ++c;
  return c;
}

}  // namespace

ReferenceFloatDPSS::ReferenceFloatDPSS(std::span<const PowerItem> items) : items_(items.begin(), items.end()) {
  std::sort(items_.begin(), items_.end(), [](const PowerItem& a, const PowerItem& b) { return a.exponent > b.exponent; });
  for (std::size_t k = 0; k < items_.size(); ++k) {
    if (k > 0 && items_[k].exponent == items_[k - 1].exponent) {
      throw std::invalid_argument("ReferenceFloatDPSS: repeated exponent " + std::to_string(items_[k].exponent));
    }
    if (!exponent_of_.emplace(items_[k].id, items_[k].exponent).second) {
      throw std::invalid_argument("ReferenceFloatDPSS: repeated id " + std::to_string(items_[k].id));
    }
  }
}

void ReferenceFloatDPSS::erase(std::uint64_t id) {
  const auto it = exponent_of_.find(id);
  if (it == exponent_of_.end()) throw std::invalid_argument("ReferenceFloatDPSS: unknown id " + std::to_string(id));
  const std::uint64_t e = it->second;
  exponent_of_.erase(it);
  const auto pos = std::lower_bound(items_.begin(), items_.end(), e,
                                    [](const PowerItem& x, std::uint64_t v) { return x.exponent > v; });
  items_.erase(pos);
  scaled_fresh_ = false;
}

std::size_t ReferenceFloatDPSS::exact_prefix() const { return 2 * ceil_log2_size(items_.size()) + 1; }

void ReferenceFloatDPSS::refresh_scaled_total() {
  const std::uint64_t top = items_.front().exponent;
  s63_ = 0;
  for (const auto& it : items_) {
    const std::uint64_t d = top - it.exponent;
    if (d > 63) break;
    s63_ += static_cast<u128>(1) << (63 - d);
  }
  scaled_fresh_ = true;
}

// U < 2^-d / s, i.e. U s < 2^-d, by brackets of U s at k bits of U and of s:
// U in [u, u+1) 2^-k and s in [S, S+1) 2^-k, so U s in [u S, (u+1)(S+1)) 2^-2k.
bool ReferenceFloatDPSS::coin(LazyUniform& u, std::uint64_t d) {
  {
    const u128 lo_u = u.word(0) >> 1;
    const u128 lower = lo_u * s63_;
    const u128 upper = (lo_u + 1) * (s63_ + 1);
    if (d <= 126) {
      const u128 target = static_cast<u128>(1) << (126 - d);
      if (upper <= target) return true;
      if (lower >= target) return false;
    } else if (lo_u != 0) {
      return false;
    }
  }
  const std::uint64_t top = items_.front().exponent;
  for (std::uint64_t k = 128;; k *= 2) {
    MultiWordInt lo_u;
    for (std::uint64_t j = 0; j < k / 64; ++j) {
      lo_u <<= 64;
      lo_u |= u.word(j);
    }
    MultiWordInt s;
    for (const auto& it : items_) {
      const std::uint64_t dj = top - it.exponent;
      if (dj > k) break;
      bit_set(s, static_cast<unsigned>(k - dj));
    }
    if (d <= 2 * k) {
      MultiWordInt target;
      bit_set(target, static_cast<unsigned>(2 * k - d));
      if ((lo_u + 1) * (s + 1) <= target) return true;
      if (lo_u * s >= target) return false;
    } else if (!lo_u.is_zero()) {
      return false;
    }
  }
}

void ReferenceFloatDPSS::query(RandomSource& src, std::vector<PowerItem>& out) {
  if (items_.empty()) throw InvalidState("ReferenceFloatDPSS: query on an empty structure");
  if (!scaled_fresh_) refresh_scaled_total();
  const std::uint64_t top = items_.front().exponent;
  const std::size_t n = items_.size();
  const std::size_t r = std::min(n, exact_prefix());
  for (std::size_t k = 0; k < r; ++k) {
    LazyUniform u(src);
    if (coin(u, top - items_[k].exponent)) out.push_back(items_[k]);
  }
  if (r == n) return;
  // Rank k >= r has 2^a / W <= 2^-k <= 2^-(2c+1) < rho = 2^-2c.
  const unsigned c = ceil_log2_size(n);
  if (skip_.size() <= c) skip_.resize(c + 1);
  if (!skip_[c]) skip_[c] = std::make_unique<BoundedGeometric>(Rational(MultiWordInt(1), MultiWordInt(1) << (2 * c)));
  BoundedGeometric& geo = *skip_[c];
  const std::uint64_t rest = n - r;
  for (std::uint64_t k = geo.sample(src, rest + 1); k <= rest; k += geo.sample(src, rest + 1)) {
    const PowerItem& it = items_[r + k - 1];
    // (2^a / W) / rho = 2^-(top - a - 2c) / s
    LazyUniform u(src);
    if (coin(u, top - it.exponent - 2 * c)) out.push_back(it);
  }
}

std::vector<PowerItem> ReferenceFloatDPSS::query(RandomSource& src) {
  std::vector<PowerItem> out;
  query(src, out);
  return out;
}

double SortStats::mean_queries_per_iteration() const { return n ? static_cast<double>(queries) / n : 0.0; }
double SortStats::mean_sample_size() const { return queries ? static_cast<double>(sampled) / queries : 0.0; }

double SortStats::queries_se() const {
  if (n < 2) return 0.0;
  const double m = mean_queries_per_iteration();
  return std::sqrt(std::max(0.0, queries_sq / n - m * m) / n);
}

double SortStats::sample_size_se() const {
  if (queries < 2) return 0.0;
  const double m = mean_sample_size();
  return std::sqrt(std::max(0.0, sampled_sq / queries - m * m) / queries);
}

std::vector<std::uint64_t> sort_via_dpss(std::span<const std::uint64_t> values, RandomSource& src,
                                         SortStats* stats) {
  std::vector<PowerItem> items;
  items.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) items.push_back(PowerItem{k, values[k]});
  std::vector<std::uint64_t> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("sort_via_dpss: values must be distinct");
  }
  ReferenceFloatDPSS d(items);
  SortStats local;
  local.n = values.size();
  std::vector<std::uint64_t> out;
  out.reserve(values.size());
  std::vector<PowerItem> sample;
  while (!d.empty()) {
    std::uint64_t tries = 0;
    do {
      sample.clear();
      d.query(src, sample);
      ++tries;
      local.sampled += sample.size();
      local.sampled_sq += static_cast<double>(sample.size()) * static_cast<double>(sample.size());
    } while (sample.empty());
    local.queries += tries;
    local.queries_sq += static_cast<double>(tries) * static_cast<double>(tries);
    const PowerItem best = sample.front();
    d.erase(best.id);
    out.push_back(best.exponent);
    for (std::size_t k = out.size() - 1; k > 0 && out[k - 1] < out[k]; --k) {
      std::swap(out[k - 1], out[k]);
      ++local.swaps;
    }
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace dpss
