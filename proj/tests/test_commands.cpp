#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>

#include "dpss/commands.hpp"

using namespace dpss;

namespace {

const std::string kDir = DPSS_FIXTURE_DIR;

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run query(const std::string& file, const std::string& alpha, const std::string& beta, std::uint64_t seed = 1) {
  std::ostringstream out, err;
  const int status = cmd_query(kDir + "/" + file, alpha, beta, seed, out, err);
  return {status, out.str(), err.str()};
}

}  // namespace

TEST_CASE("query prints mu and the sampled ids") {
  const auto r = query("01_single.tsv", "0", "4");
  CHECK(r.status == 0);
  CHECK(r.out == "# mu=1\n100\n");
  CHECK(r.err.empty());

  const auto half = query("02_pair_equal.tsv", "1", "0");
  CHECK(half.status == 0);
  CHECK(half.out.rfind("# mu=1\n", 0) == 0);
}

TEST_CASE("query errors exit nonzero") {
  const auto degenerate = query("01_single.tsv", "0", "0");
  CHECK(degenerate.status != 0);
  CHECK(degenerate.out.empty());
  CHECK(degenerate.err.find("degenerate") != std::string::npos);

  const auto decimal = query("01_single.tsv", "0.5", "0");
  CHECK(decimal.status != 0);
  CHECK(decimal.err.find("alpha") != std::string::npos);

  CHECK(query("01_single.tsv", "0", "-1").status != 0);
  CHECK(query("no_such_file.tsv", "1", "0").status != 0);
}

TEST_CASE("query output is a function of the seed") {
  const auto a = query("items64.tsv", "1/4", "0", 7);
  const auto b = query("items64.tsv", "1/4", "0", 7);
  CHECK(a.status == 0);
  CHECK(a.out == b.out);
  bool differs = false;
  for (std::uint64_t seed = 8; seed < 20 && !differs; ++seed) differs = query("items64.tsv", "1/4", "0", seed).out != a.out;
  CHECK(differs);
}

TEST_CASE("verify table passes and reports CSV") {
  VerifyOptions v;
  v.suite = "table";
  std::ostringstream out, err;
  CHECK(cmd_verify(v, out, err) == 0);
  CHECK(out.str().rfind("outcome,expected,observed,trials,z,pass\n", 0) == 0);
  CHECK(out.str().find(",FAIL\n") == std::string::npos);
}

TEST_CASE("verify at small trials is reproducible and rejects unknown suites") {
  VerifyOptions v;
  v.suite = "pss";
  v.items = kDir + "/17_ramp8.tsv";
  v.trials = 20'000;
  std::ostringstream a, b, err;
  CHECK(cmd_verify(v, a, err) == 0);
  v.threads = 3;
  CHECK(cmd_verify(v, b, err) == 0);
  CHECK(a.str() == b.str());

  v.suite = "nonsense";
  std::ostringstream out;
  CHECK(cmd_verify(v, out, err) == 2);
}

TEST_CASE("sort-demo") {
  std::ostringstream out, err;
  CHECK(cmd_sort_demo(3, 100, 5, out, err) == 0);
  CHECK(out.str().find("sorted=correct") != std::string::npos);

  std::ostringstream again, err2;
  cmd_sort_demo(3, 100, 5, again, err2);
  CHECK(again.str() == out.str());

  std::ostringstream bad, err3;
  CHECK(cmd_sort_demo(5, 2, 1, bad, err3) != 0);
}

TEST_CASE("bench rejects unknown kinds and writes one record per size") {
  BenchOptions b;
  b.kind = "build";
  b.sizes = {100, 1000};
  b.reps = 1;
  std::ostringstream out, err;
  CHECK(cmd_bench(b, out, err) == 0);
  const std::string s = out.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);

  b.kind = "nonsense";
  CHECK(cmd_bench(b, out, err) != 0);
}
