#include "dpss/suites.hpp"

#include <set>

#include "dpss/bounded_int_set.hpp"
#include "dpss/errors.hpp"
#include "dpss/lookup_table.hpp"
#include "dpss/samplers.hpp"

namespace dpss {

namespace {

Rational R(const char* s) { return Rational::parse(s); }

Rational power(const Rational& x, std::uint64_t k) {
  Rational r(1);
  for (std::uint64_t j = 0; j < k; ++j) r = r * x;
  return r;
}

// (1 - (1-q)^n) / (n q)
Rational pstar_definition(const Rational& q, std::uint64_t n) {
  return (Rational(1) - power(Rational(1) - q, n)) / (Rational::from_u64(n) * q);
}

std::vector<Rational> bgeo_pmf(const Rational& p, std::uint64_t n) {
  std::vector<Rational> pmf;
  Rational tail(1);  // (1-p)^(i-1)
  for (std::uint64_t i = 1; i < n; ++i) {
    pmf.push_back(p * tail);
    tail = tail * (Rational(1) - p);
  }
  pmf.push_back(tail);
  return pmf;
}

std::vector<Rational> tgeo_pmf(const Rational& p, std::uint64_t n) {
  const Rational norm = Rational(1) - power(Rational(1) - p, n);
  std::vector<Rational> pmf;
  Rational tail(1);
  for (std::uint64_t i = 1; i <= n; ++i) {
    pmf.push_back(p * tail / norm);
    tail = tail * (Rational(1) - p);
  }
  return pmf;
}

NamedReport coin_report(std::string name, const Rational& p, const std::function<bool(RandomSource&)>& coin,
                        std::uint64_t trials, std::uint64_t seed, double z_max) {
  const std::vector<Rational> pmf = {Rational(1) - p, p};
  return {std::move(name), pmf_test([&](RandomSource& s) { return coin(s) ? 2u : 1u; }, pmf, trials, z_max, seed)};
}

std::string label(const Rational& p, std::uint64_t n) { return "(" + p.to_string() + "," + std::to_string(n) + ")"; }

}  // namespace

std::vector<NamedReport> sampler_suite(std::uint64_t trials, std::uint64_t seed, double z_max) {
  std::vector<NamedReport> out;
  std::uint64_t stream = 0;
  auto next_seed = [&] { return derive_seed(seed, stream++); };

  for (const char* text : {"0", "1", "1/2", "1/3", "2/7", "1/1000", "999/1000", "12345678901234567/98765432109876543",
                           "3/1180591620717411303424"}) {
    const Rational p = R(text);
    out.push_back(coin_report("ber_rational(" + p.to_string() + ")", p,
                              [&](RandomSource& s) { return ber_rational(s, p); }, trials, next_seed(), z_max));
  }

  const std::vector<std::pair<const char*, std::uint64_t>> pstar_sets = {
      {"1/2", 1}, {"1/2", 2}, {"1/3", 3}, {"1/10", 5}, {"1/100", 10}, {"1/7", 7}, {"1/1000", 1000}, {"3/1000", 200}};
  for (const auto& [q_text, n] : pstar_sets) {
    const Rational q = R(q_text);
    const Rational ps = pstar_definition(q, n);
    out.push_back(coin_report("ber_pstar" + label(q, n), ps, [&, n = n](RandomSource& s) { return ber_pstar(s, q, n); },
                              trials, next_seed(), z_max));
    out.push_back(coin_report("ber_half_inv_pstar" + label(q, n), ps.reciprocal() * R("1/2"),
                              [&, n = n](RandomSource& s) { return ber_half_inv_pstar(s, q, n); }, trials, next_seed(),
                              z_max));
  }

  const std::vector<std::pair<const char*, std::uint64_t>> bgeo_sets = {
      {"1/2", 1}, {"1/2", 3}, {"1/3", 10}, {"9/10", 5}, {"1/10000", 101}, {"1/1099511627776", 3}, {"2/5", 40}};
  for (const auto& [p_text, n] : bgeo_sets) {
    const Rational p = R(p_text);
    const auto pmf = bgeo_pmf(p, n);
    out.push_back({"bgeo" + label(p, n),
                   pmf_test([&, n = n](RandomSource& s) { return bgeo(s, p, n); }, pmf, trials, z_max, next_seed())});
    out.push_back({"bgeo_reference" + label(p, n),
                   pmf_test([&, n = n](RandomSource& s) { return bgeo_reference(s, p, n); }, pmf, trials, z_max,
                            next_seed())});
  }

  // Three regimes: n <= 2; n >= 3 with np >= 1; n >= 3 with np < 1 (proposal loop).
  const std::vector<std::pair<const char*, std::uint64_t>> tgeo_sets = {
      {"1/2", 1}, {"1/3", 2}, {"99/100", 2}, {"1/4", 8}, {"1/2", 20}, {"1/3", 3},
      {"1/100", 10}, {"1/7", 5}, {"1/1000", 50}, {"1/4", 3}};
  for (const auto& [p_text, n] : tgeo_sets) {
    const Rational p = R(p_text);
    out.push_back({"tgeo" + label(p, n), pmf_test([&, n = n](RandomSource& s) { return tgeo(s, p, n); },
                                                  tgeo_pmf(p, n), trials, z_max, next_seed())});
  }
  return out;
}

NamedReport tgeo_half_two(std::uint64_t trials, std::uint64_t seed, double z_max) {
  const Rational half = R("1/2");
  const std::vector<Rational> pmf = {R("2/3"), R("1/3")};
  return {"tgeo(1/2,2)", pmf_test([&](RandomSource& s) { return tgeo(s, half, 2); }, pmf, trials, z_max, seed)};
}

std::vector<NamedReport> table_suite(std::uint64_t max_cells) {
  std::vector<NamedReport> out;
  for (unsigned m = 2; m <= 6; ++m) {
    for (unsigned k = 1; k <= LookupTable::kMaxSlots; ++k) {
      std::uint64_t rows = 1, cells = 1;
      for (unsigned j = 0; j < k; ++j) {
        rows *= m + 1;
        cells *= static_cast<std::uint64_t>(m) * m;
      }
      if (rows > 10'000 || rows * cells > max_cells) break;
      const LookupTable t = LookupTable::build(k, m, ~std::uint64_t{0});
      const Rational m2 = Rational::from_u64(static_cast<std::uint64_t>(m) * m);
      std::uint64_t mismatches = 0;
      std::vector<std::uint64_t> count(std::uint64_t{1} << k);
      for (std::uint64_t row = 0; row < rows; ++row) {
        std::fill(count.begin(), count.end(), 0);
        for (std::uint64_t c = 0; c < cells; ++c) ++count.at(t.cell(row, c));
        // Slot j (1-based) has count c_j = digit j-1 of row in base m+1.
        std::vector<Rational> p(k);
        std::uint64_t rest = row;
        for (unsigned j = 1; j <= k; ++j) {
          const std::uint64_t c = rest % (m + 1);
          rest /= m + 1;
          p[j - 1] = min(Rational(1), Rational::from_u64(c << (j + 1)) / m2);
        }
        for (std::uint64_t r = 0; r < count.size(); ++r) {
          Rational pr(1);
          for (unsigned j = 0; j < k; ++j) pr = pr * (((r >> j) & 1u) ? p[j] : Rational(1) - p[j]);
          if (pr * power(m2, k) != Rational::from_u64(count[r])) ++mismatches;
        }
      }
      FrequencyRow row{"m=" + std::to_string(m) + ",K=" + std::to_string(k), Rational(0), mismatches,
                       rows * count.size(), 0.0, mismatches == 0};
      out.push_back({"table", {row}});
    }
  }
  return out;
}

std::vector<NamedReport> sorted_set_suite(std::uint64_t ops, std::uint64_t seed) {
  std::vector<NamedReport> out;
  std::uint64_t stream = 0;
  for (unsigned u : {1u, 2u, 7u, 64u, 65u, 200u, 256u}) {
    RandomSource src(derive_seed(seed, stream++));
    BoundedIntSet s(u);
    std::set<unsigned> oracle;
    std::uint64_t mismatches = 0;
    auto same = [&](std::optional<unsigned> a, std::optional<unsigned> b) { mismatches += a == b ? 0 : 1; };
    for (std::uint64_t t = 0; t < ops; ++t) {
      const auto q = static_cast<unsigned>(src.below(u));
      switch (src.below(4)) {
        case 0:
          if (!oracle.count(q)) {
            s.insert(q);
            oracle.insert(q);
          }
          break;
        case 1:
          if (oracle.count(q)) {
            s.erase(q);
            oracle.erase(q);
          }
          break;
        case 2: {
          const auto it = oracle.lower_bound(q);
          same(s.successor(q), it == oracle.end() ? std::nullopt : std::optional<unsigned>(*it));
          break;
        }
        default: {
          const auto it = oracle.upper_bound(q);
          same(s.predecessor(q), it == oracle.begin() ? std::nullopt : std::optional<unsigned>(*std::prev(it)));
          break;
        }
      }
      mismatches += s.contains(q) == (oracle.count(q) != 0) ? 0 : 1;
      mismatches += s.size() == oracle.size() ? 0 : 1;
      if (t % 1024 == 0) {
        mismatches += s.to_vector() == std::vector<unsigned>(oracle.begin(), oracle.end()) ? 0 : 1;
        try {
          s.audit();
        } catch (const InvalidState&) {
          ++mismatches;
        }
      }
    }
    FrequencyRow row{"universe=" + std::to_string(u), Rational(0), mismatches, ops, 0.0, mismatches == 0};
    out.push_back({"sorted-set", {row}});
  }
  return out;
}

void write_reports_csv(std::ostream& out, const std::vector<NamedReport>& reports) {
  for (const auto& r : reports) {
    FrequencyReport named = r.rows;
    for (auto& row : named) row.outcome = r.name + "/" + row.outcome;
    write_csv(out, named);
  }
}

}  // namespace dpss
