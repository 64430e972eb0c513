#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "dpss/bounded_int_set.hpp"
#include "dpss/random.hpp"

using namespace dpss;

namespace {

std::optional<unsigned> scan_successor(const std::set<unsigned>& s, unsigned q) {
  auto it = s.lower_bound(q);
  if (it == s.end()) return std::nullopt;
  return *it;
}

std::optional<unsigned> scan_predecessor(const std::set<unsigned>& s, unsigned q) {
  std::optional<unsigned> best;
  for (unsigned v : s) if (v <= q) best = v;
  return best;
}

}  // namespace

TEST_CASE("build and iterate") {
  const std::vector<unsigned> m{3, 7, 1};
  const auto s = BoundedIntSet::build(m, 64);
  CHECK(s.to_vector() == std::vector<unsigned>{1, 3, 7});
  s.audit();
  const auto e = BoundedIntSet::build({}, 64);
  CHECK(e.empty());
  CHECK_FALSE(e.successor(0).has_value());
  CHECK_FALSE(e.min().has_value());
  const std::vector<unsigned> bad{70};
  CHECK_THROWS_AS(BoundedIntSet::build(bad, 64), std::invalid_argument);
  const std::vector<unsigned> dup{2, 2};
  CHECK_THROWS_AS(BoundedIntSet::build(dup, 64), std::invalid_argument);
  CHECK_THROWS_AS(BoundedIntSet(257), std::invalid_argument);

  RandomSource src(1);
  std::vector<unsigned> all(128);
  for (unsigned i = 0; i < 128; ++i) all[i] = i;
  for (int t = 0; t < 50; ++t) {
    for (unsigned i = 127; i > 0; --i) std::swap(all[i], all[src.below(i + 1)]);
    std::vector<unsigned> pick(all.begin(), all.begin() + 32);
    const auto r = BoundedIntSet::build(pick, 128);
    std::sort(pick.begin(), pick.end());
    CHECK(r.to_vector() == pick);
    r.audit();
  }
}

TEST_CASE("insert and erase") {
  const std::vector<unsigned> m{1, 3, 7};
  auto s = BoundedIntSet::build(m, 64);
  s.insert(5);
  CHECK(s.to_vector() == std::vector<unsigned>{1, 3, 5, 7});
  s.erase(3);
  CHECK(s.to_vector() == std::vector<unsigned>{1, 5, 7});
  CHECK_THROWS_AS(s.insert(5), std::invalid_argument);
  CHECK_THROWS_AS(s.erase(3), std::invalid_argument);
  CHECK_THROWS_AS(s.insert(64), std::invalid_argument);
  s.audit();
  auto t = BoundedIntSet::build(m, 64);
  t.erase(3);
  CHECK(t.to_vector() == std::vector<unsigned>{1, 7});
}

TEST_CASE("random updates against a sorted container") {
  RandomSource src(2);
  BoundedIntSet s(256);
  std::set<unsigned> oracle;
  for (int step = 0; step < 100000; ++step) {
    const auto q = static_cast<unsigned>(src.below(256));
    if (oracle.count(q)) {
      s.erase(q);
      oracle.erase(q);
    } else {
      s.insert(q);
      oracle.insert(q);
    }
    REQUIRE(s.size() == oracle.size());
    if (step % 97 == 0) {
      REQUIRE(s.to_vector() == std::vector<unsigned>(oracle.begin(), oracle.end()));
      s.audit();
    }
    const auto probe = static_cast<unsigned>(src.below(256));
    REQUIRE(s.successor(probe) == scan_successor(oracle, probe));
  }
}

TEST_CASE("successor and predecessor") {
  const std::vector<unsigned> m{1, 3, 7};
  const auto s = BoundedIntSet::build(m, 64);
  CHECK(s.successor(4) == 7u);
  CHECK_FALSE(s.predecessor(0).has_value());
  CHECK(s.predecessor(6) == 3u);
  CHECK(s.max() == 7u);
  RandomSource src(3);
  for (int t = 0; t < 100; ++t) {
    std::set<unsigned> oracle;
    const auto k = src.below(40);
    for (std::uint64_t i = 0; i < k; ++i) oracle.insert(static_cast<unsigned>(src.below(128)));
    const std::vector<unsigned> v(oracle.begin(), oracle.end());
    const auto b = BoundedIntSet::build(v, 128);
    for (unsigned q = 0; q < 128; ++q) {
      REQUIRE(b.successor(q) == scan_successor(oracle, q));
      REQUIRE(b.predecessor(q) == scan_predecessor(oracle, q));
    }
  }
}
