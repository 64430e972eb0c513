#include "dpss/verification.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>

#include "dpss/errors.hpp"
#include "dpss/samplers.hpp"

namespace dpss {

namespace {

double two_sided_level(double z_max) { return std::erfc(z_max / std::sqrt(2.0)); }

// Normal deviate with the same two-sided tail mass as `pvalue`.
double equivalent_z(double pvalue) {
  if (pvalue >= 1.0) return 0.0;
  if (pvalue <= 0.0) return std::numeric_limits<double>::infinity();
  const boost::math::normal_distribution<double> normal;
  return boost::math::quantile(boost::math::complement(normal, pvalue / 2));
}

std::string format_z(double z) {
  if (std::isinf(z)) return z > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", z);
  return buf;
}

struct ShardCounts {
  std::vector<std::uint64_t> marginal;
  std::vector<std::uint64_t> pair;
  std::uint64_t total_size = 0;
};

void run_shard(const SubsetSamplerFactory& factory, std::size_t n, std::uint64_t trials, std::uint64_t seed,
               bool with_pairs, ShardCounts& c) {
  c.marginal.assign(n, 0);
  if (with_pairs) c.pair.assign(n * (n - 1) / 2, 0);
  SubsetSampler sampler = factory();
  RandomSource src(seed);
  std::vector<std::size_t> out;
  std::vector<std::uint64_t> cols(n);
  for (std::uint64_t done = 0; done < trials;) {
    const unsigned batch = static_cast<unsigned>(std::min<std::uint64_t>(64, trials - done));
    std::fill(cols.begin(), cols.end(), 0);
    for (unsigned t = 0; t < batch; ++t) {
      out.clear();
      sampler(src, out);
      c.total_size += out.size();
      const std::uint64_t bit = std::uint64_t{1} << t;
      for (std::size_t pos : out) {
        if (pos >= n) throw InvalidState("sampler returned position " + std::to_string(pos));
        if (cols[pos] & bit) throw InvalidState("sampler returned position " + std::to_string(pos) + " twice");
        cols[pos] |= bit;
      }
    }
    // Bit-sliced counting: one popcount covers 64 trials of an item or a pair.
    std::size_t idx = 0;
    for (std::size_t a = 0; a < n; ++a) {
      c.marginal[a] += static_cast<std::uint64_t>(std::popcount(cols[a]));
      if (!with_pairs) continue;
      if (cols[a] == 0) {
        idx += n - a - 1;
        continue;
      }
      for (std::size_t b = a + 1; b < n; ++b, ++idx) {
        c.pair[idx] += static_cast<std::uint64_t>(std::popcount(cols[a] & cols[b]));
      }
    }
    done += batch;
  }
}

}  // namespace

bool all_pass(const FrequencyReport& report) { return count_failures(report) == 0; }

std::size_t count_failures(const FrequencyReport& report) {
  std::size_t f = 0;
  for (const auto& r : report) f += r.pass ? 0 : 1;
  return f;
}

void write_csv_header(std::ostream& out) { out << "outcome,expected,observed,trials,z,pass\n"; }

void write_csv(std::ostream& out, const FrequencyReport& report) {
  for (const auto& r : report) {
    out << r.outcome << ',' << r.expected.reduced().to_string() << ',' << r.observed << ',' << r.trials << ','
        << format_z(r.z) << ',' << (r.pass ? "pass" : "FAIL") << '\n';
  }
}

FrequencyRow frequency_row(std::string outcome, const Rational& expected, std::uint64_t observed,
                           std::uint64_t trials, double z_max) {
  FrequencyRow row{std::move(outcome), expected, observed, trials, 0.0, false};
  if (trials == 0) throw std::invalid_argument("frequency_row: zero trials");
  if (expected.sign() <= 0) {
    row.pass = observed == 0;
    row.z = row.pass ? 0.0 : std::numeric_limits<double>::infinity();
    return row;
  }
  if (expected >= Rational(1)) {
    row.pass = observed == trials;
    row.z = row.pass ? 0.0 : -std::numeric_limits<double>::infinity();
    return row;
  }
  const double p = expected.to_double();
  const auto t = static_cast<double>(trials);
  const auto k = static_cast<double>(observed);
  if (t * p >= kRareCount && t * (1 - p) >= kRareCount) {
    row.z = (k / t - p) / std::sqrt(p * (1 - p) / t);
    row.pass = std::abs(row.z) <= z_max;
    return row;
  }
  const boost::math::binomial_distribution<double> law(t, p);
  const double lower = boost::math::cdf(law, k);
  const double upper = k == 0 ? 1.0 : boost::math::cdf(boost::math::complement(law, k - 1));
  const double pvalue = std::min(1.0, 2 * std::min(lower, upper));
  row.pass = pvalue >= two_sided_level(z_max);
  row.z = (k >= t * p ? 1.0 : -1.0) * equivalent_z(pvalue);
  return row;
}

std::vector<std::uint64_t> oracle_pss(std::span<const Item> items, const QueryParams& params, RandomSource& src) {
  const auto probs = inclusion_probabilities(items, params);
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (ber_rational(src, probs[i])) out.push_back(items[i].id);
  }
  return out;
}

namespace {

ShardCounts collect(const SubsetSamplerFactory& factory, std::size_t n, std::uint64_t trials, std::uint64_t seed,
                    bool with_pairs, unsigned threads) {
  std::vector<ShardCounts> shards(kShards);
  auto shard_trials = [&](unsigned s) { return trials / kShards + (s < trials % kShards ? 1 : 0); };
  threads = std::clamp(threads, 1u, kShards);
  if (threads == 1) {
    for (unsigned s = 0; s < kShards; ++s) {
      run_shard(factory, n, shard_trials(s), derive_seed(seed, s), with_pairs, shards[s]);
    }
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (unsigned s = w; s < kShards; s += threads) {
            run_shard(factory, n, shard_trials(s), derive_seed(seed, s), with_pairs, shards[s]);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  ShardCounts total;
  total.marginal.assign(n, 0);
  total.pair.assign(with_pairs ? n * (n - 1) / 2 : 0, 0);
  for (const auto& s : shards) {
    for (std::size_t i = 0; i < n; ++i) total.marginal[i] += s.marginal[i];
    for (std::size_t i = 0; i < total.pair.size(); ++i) total.pair[i] += s.pair[i];
    total.total_size += s.total_size;
  }
  return total;
}

// `marg` supplies the law used for rare pairs (exact or estimated marginals).
FrequencyReport pair_rows(const ShardCounts& total, std::span<const Rational> marg, std::uint64_t trials,
                          double z_max) {
  FrequencyReport rows;
  const std::size_t n = marg.size();
  const auto t = static_cast<double>(trials);
  std::size_t idx = 0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b, ++idx) {
      const Rational joint = marg[a] * marg[b];
      std::string name = "pair " + std::to_string(a) + ":" + std::to_string(b);
      const std::uint64_t nab = total.pair[idx];
      const double pj = joint.to_double();
      if (t * pj < kRareCount || t * (1 - pj) < kRareCount) {
        rows.push_back(frequency_row(std::move(name), joint, nab, trials, z_max));
        continue;
      }
      const double pa = static_cast<double>(total.marginal[a]) / t;
      const double pb = static_cast<double>(total.marginal[b]) / t;
      const double cov = static_cast<double>(nab) / t - pa * pb;
      const double se = std::sqrt(pa * (1 - pa) * pb * (1 - pb) / t);
      FrequencyRow row{std::move(name), joint, nab, trials, 0.0, false};
      if (se == 0.0) {
        row.pass = cov == 0.0;
        row.z = row.pass ? 0.0 : std::numeric_limits<double>::infinity();
      } else {
        row.z = cov / se;
        row.pass = std::abs(row.z) <= z_max;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

SubsetReport subset_test(const SubsetSamplerFactory& factory, std::span<const Rational> expected,
                         std::uint64_t trials, double z_max, std::uint64_t seed, bool with_pairs,
                         unsigned threads) {
  const std::size_t n = expected.size();
  const ShardCounts total = collect(factory, n, trials, seed, with_pairs, threads);
  SubsetReport report;
  report.mean_size = static_cast<double>(total.total_size) / static_cast<double>(trials);
  for (std::size_t i = 0; i < n; ++i) {
    report.marginals.push_back(
        frequency_row("item " + std::to_string(i), expected[i], total.marginal[i], trials, z_max));
  }
  if (with_pairs) report.pairs = pair_rows(total, expected, trials, z_max);
  return report;
}

FrequencyReport marginal_test(const SubsetSamplerFactory& factory, std::span<const Rational> expected,
                              std::uint64_t trials, double z_max, std::uint64_t seed, unsigned threads) {
  return subset_test(factory, expected, trials, z_max, seed, false, threads).marginals;
}

FrequencyReport independence_test(const SubsetSamplerFactory& factory, std::size_t n_items, std::uint64_t trials,
                                  double z_max, std::uint64_t seed, unsigned threads) {
  const ShardCounts total = collect(factory, n_items, trials, seed, true, threads);
  std::vector<Rational> estimated;
  for (std::size_t i = 0; i < n_items; ++i) {
    estimated.emplace_back(MultiWordInt(total.marginal[i]), MultiWordInt(trials));
  }
  auto rows = pair_rows(total, estimated, trials, z_max);
  for (auto& row : rows) row.expected = Rational(0);
  return rows;
}

FrequencyReport pmf_test(const ValueSampler& sampler, std::span<const Rational> pmf, std::uint64_t trials,
                         double z_max, std::uint64_t seed) {
  const std::size_t n = pmf.size();
  std::vector<std::uint64_t> counts(n, 0);
  std::uint64_t out_of_range = 0;
  RandomSource src(seed);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::uint64_t k = sampler(src);
    if (k >= 1 && k <= n) ++counts[k - 1];
    else ++out_of_range;
  }
  FrequencyReport report;
  Rational tail_p(0);
  std::uint64_t tail_count = 0;
  bool any_tail = false;
  const auto t = static_cast<double>(trials);
  for (std::size_t i = 0; i < n; ++i) {
    if (t * pmf[i].to_double() < kRareCount) {
      tail_p = tail_p + pmf[i];
      tail_count += counts[i];
      any_tail = true;
      continue;
    }
    report.push_back(frequency_row("k=" + std::to_string(i + 1), pmf[i], counts[i], trials, z_max));
  }
  if (any_tail) report.push_back(frequency_row("tail", tail_p, tail_count, trials, z_max));
  report.push_back(frequency_row("out-of-range", Rational(0), out_of_range, trials, z_max));
  return report;
}

}  // namespace dpss
