#include <CLI11.hpp>

#include <iostream>
#include <random>

#include "dpss/commands.hpp"

namespace {

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic parameterized subset sampling"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;

  std::string file, alpha, beta;
  auto* query = app.add_subcommand("query", "Build from an item file and run one query");
  query->add_option("file", file, "Item file: <id><TAB><weight> per line")->required();
  query->add_option("--alpha", alpha, "alpha as p/q or an integer")->required();
  query->add_option("--beta", beta, "beta as p/q or an integer")->required();
  query->add_option("--seed", seed, "RNG seed (default: OS entropy)");

  dpss::VerifyOptions vopt;
  vopt.items = DPSS_DEFAULT_ITEMS;
  auto* verify = app.add_subcommand("verify", "Run a statistical or exactness suite; CSV on stdout");
  verify->add_option("suite", vopt.suite, "samplers, pss, table or sorted-set")
      ->required()
      ->check(CLI::IsMember({"samplers", "pss", "table", "sorted-set"}));
  verify->add_option("--seed", vopt.seed, "RNG seed")->capture_default_str();
  verify->add_option("--trials", vopt.trials, "Trials per test")->capture_default_str()->check(CLI::PositiveNumber);
  verify->add_option("--threads", vopt.threads, "Worker threads for sharded trials")->capture_default_str();
  verify->add_option("--items", vopt.items, "Item file for the pss suite")->capture_default_str();

  dpss::BenchOptions bopt;
  auto* bench = app.add_subcommand("bench", "Latency measurements; CSV on stdout");
  bench->add_option("kind", bopt.kind, "query, update or build")
      ->required()
      ->check(CLI::IsMember({"query", "update", "build"}));
  bench->add_option("--n", bopt.sizes, "Structure sizes (default 10000 100000 1000000)");
  bench->add_option("--seed", bopt.seed, "RNG seed")->capture_default_str();
  bench->add_option("--reps", bopt.reps, "Repetitions (build) or measured rounds (update)")->capture_default_str();
  bench->add_option("--per-round", bopt.per_round, "update: delete+insert pairs per round")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::uint64_t n = 0, max_exponent = std::uint64_t{1} << 20;
  auto* sort = app.add_subcommand("sort-demo", "Sort random distinct integers through the sampling reduction");
  sort->add_option("--n", n, "Number of integers")->required()->check(CLI::PositiveNumber);
  sort->add_option("--max-exponent", max_exponent, "Values are drawn from [0, max-exponent]")->capture_default_str();
  sort->add_option("--seed", seed, "RNG seed (default: OS entropy)");

  CLI11_PARSE(app, argc, argv);

  if (*query) return dpss::cmd_query(file, alpha, beta, seed.value_or(entropy_seed()), std::cout, std::cerr);
  if (*verify) return dpss::cmd_verify(vopt, std::cout, std::cerr);
  if (*bench) return dpss::cmd_bench(bopt, std::cout, std::cerr);
  if (*sort) return dpss::cmd_sort_demo(n, max_exponent, seed.value_or(entropy_seed()), std::cout, std::cerr);
  return 2;
}
