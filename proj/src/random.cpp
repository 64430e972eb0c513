#include "dpss/random.hpp"

#include <bit>
#include <random>
#include <stdexcept>

namespace dpss {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

std::uint64_t RandomSource::below(std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("random_below: m must be positive");
  if (m == 1) return 0;
  const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(m - 1);
  for (;;) {
    const std::uint64_t v = next_word() & mask;
    if (v < m) return v;
  }
}

std::uint64_t random_below(RandomSource& src, std::uint64_t m) { return src.below(m); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed ^ (stream * 0xd1b54a32d192ed03ULL);
  splitmix64(x);
  return splitmix64(x);
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace dpss
