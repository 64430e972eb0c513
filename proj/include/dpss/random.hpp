#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include <boost/container/small_vector.hpp>

namespace dpss {

/// Seedable 64-bit generator (xoshiro256**, state expanded from the seed with
/// splitmix64). The only entropy source used by the library. Single owner:
/// never share one instance between threads.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_word() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform integer in [0, m). Power-of-two masking with rejection, so the
  /// result is exact and needs fewer than two words on average.
  std::uint64_t below(std::uint64_t m);

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
};

inline std::uint64_t random_word(RandomSource& src) { return src.next_word(); }

/// Throws std::invalid_argument when m == 0.
std::uint64_t random_below(RandomSource& src, std::uint64_t m);

/// Seed for an independent sub-stream (shard, fixture, ...) of a run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seed drawn from the operating system; used only by the command-line tool
/// when no explicit seed is given.
std::uint64_t entropy_seed();

/// The binary expansion of a uniform real U in [0, 1), revealed lazily in
/// 64-bit blocks. Bit 0 is the most significant bit after the binary point.
class LazyUniform {
 public:
  explicit LazyUniform(RandomSource& src) : src_(&src) {}

  /// Bit i of U; reveals all earlier blocks if needed. Revealed bits never change.
  bool reveal_bit(std::size_t i) {
    const std::uint64_t w = word(i / 64);
    return ((w >> (63 - i % 64)) & 1u) != 0;
  }

  /// Block k holds bits [64k, 64k + 64) with bit 64k as its most significant bit.
  std::uint64_t word(std::size_t k) {
    while (words_.size() <= k) words_.push_back(src_->next_word());
    return words_[k];
  }

  std::size_t revealed_bits() const { return words_.size() * 64; }

 private:
  RandomSource* src_;
  boost::container::small_vector<std::uint64_t, 4> words_;
};

}  // namespace dpss
