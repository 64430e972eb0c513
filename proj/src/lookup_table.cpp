#include "dpss/lookup_table.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "dpss/errors.hpp"

namespace dpss {

namespace {

constexpr std::uint64_t kOverflow = std::numeric_limits<std::uint64_t>::max();

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kOverflow / a) return kOverflow;
  return a * b;
}

std::uint64_t checked_pow(std::uint64_t b, unsigned k) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < k; ++i) r = checked_mul(r, b);
  return r;
}

}  // namespace

std::uint64_t LookupTable::words_needed(unsigned slots, unsigned m) {
  if (slots == 0) return 0;
  const std::uint64_t rows = checked_pow(m + 1, slots);
  const std::uint64_t cells = checked_pow(static_cast<std::uint64_t>(m) * m, slots);
  const std::uint64_t total = checked_mul(rows, cells);
  if (total == kOverflow) return kOverflow;
  const std::uint64_t per_word = 64 / slots;
  return total / per_word + (total % per_word != 0 ? 1 : 0);
}

unsigned LookupTable::feasible_slots(unsigned m, unsigned k_max, std::uint64_t budget_words) {
  unsigned k = 0;
  while (k < k_max && k < kMaxSlots && words_needed(k + 1, m) <= budget_words) ++k;
  return k;
}

LookupTable::LookupTable(unsigned slots, unsigned m, std::uint64_t budget_words) : k_(slots), m_(m) {
  if (slots < 1 || slots > kMaxSlots || m < 2) {
    throw std::invalid_argument("LookupTable: need 1 <= K <= 8 and m >= 2");
  }
  const std::uint64_t words = words_needed(slots, m);
  if (words > budget_words) {
    throw TableTooLarge("lookup table with K=" + std::to_string(slots) + ", m=" + std::to_string(m) + " needs " +
                        (words == kOverflow ? std::string("overflowing") : std::to_string(words)) +
                        " words, budget " + std::to_string(budget_words));
  }
  per_word_ = 64 / slots;
  rows_ = checked_pow(m + 1, slots);
  cells_ = checked_pow(static_cast<std::uint64_t>(m) * m, slots);
  words_.assign(words, 0);
  left_in_result_ = multiplicity(0, 0);
}

LookupTable LookupTable::build(unsigned slots, unsigned m, std::uint64_t budget_words) {
  LookupTable t(slots, m, budget_words);
  t.fill(kOverflow);
  return t;
}

std::uint64_t LookupTable::multiplicity(std::uint64_t row, std::uint64_t result) const {
  const std::uint64_t m2 = static_cast<std::uint64_t>(m_) * m_;
  std::uint64_t mult = 1;
  for (unsigned j = 1; j <= k_; ++j) {
    const std::uint64_t c = row % (m_ + 1);
    row /= (m_ + 1);
    const std::uint64_t a = std::min<std::uint64_t>(m2, c << (j + 1));
    mult *= ((result >> (j - 1)) & 1u) ? a : m2 - a;
  }
  return mult;
}

void LookupTable::put(std::uint64_t index, std::uint64_t value) {
  const unsigned shift = static_cast<unsigned>(index % per_word_) * k_;
  words_[index / per_word_] |= value << shift;
}

// Cells [index, index + n) on zero words: single cells up to a word boundary,
// then whole words of the replicated pattern.
void LookupTable::put_run(std::uint64_t index, std::uint64_t n, std::uint64_t value) {
  while (n != 0 && index % per_word_ != 0) {
    put(index++, value);
    --n;
  }
  std::uint64_t pattern = 0;
  for (unsigned j = 0; j < per_word_; ++j) pattern |= value << (j * k_);
  std::uint64_t w = index / per_word_;
  for (; n >= per_word_; n -= per_word_, index += per_word_) words_[w++] = pattern;
  while (n-- != 0) put(index++, value);
}

std::uint64_t LookupTable::cell(std::uint64_t row, std::uint64_t index) const {
  if (k_ == 0) return 0;
  const std::uint64_t at = row * cells_ + index;
  const unsigned shift = static_cast<unsigned>(at % per_word_) * k_;
  return (words_[at / per_word_] >> shift) & ((std::uint64_t{1} << k_) - 1);
}

bool LookupTable::fill(std::uint64_t max_cells) {
  const std::uint64_t results = std::uint64_t{1} << k_;
  while (next_row_ < rows_ && max_cells != 0) {
    if (left_in_result_ == 0) {
      if (++next_result_ == results) {
        ++next_row_;
        next_result_ = 0;
        written_in_row_ = 0;
        if (next_row_ == rows_) break;
      }
      left_in_result_ = multiplicity(next_row_, next_result_);
      continue;
    }
    const std::uint64_t n = std::min(left_in_result_, max_cells);
    // Result 0 is the zero bit pattern the words already hold.
    if (next_result_ != 0) {
      const std::uint64_t base = next_row_ * cells_ + written_in_row_;
      put_run(base, n, next_result_);
    }
    written_in_row_ += n;
    left_in_result_ -= n;
    max_cells -= n;
  }
  return complete();
}

std::uint64_t LookupTable::row_index(std::span<const std::uint8_t> config) const {
  if (config.size() != k_) throw std::invalid_argument("LookupTable: configuration length differs from K");
  std::uint64_t row = 0;
  for (std::size_t j = config.size(); j-- > 0;) {
    if (config[j] > m_) throw std::invalid_argument("LookupTable: slot count above m");
    row = row * (m_ + 1) + config[j];
  }
  return row;
}

std::uint64_t LookupTable::sample(std::span<const std::uint8_t> config, RandomSource& src) const {
  if (k_ == 0) return 0;
  return sample_row(row_index(config), src);
}

bool LookupTable::verify_row(std::uint64_t row) const {
  std::vector<std::uint64_t> counts(std::size_t{1} << k_, 0);
  for (std::uint64_t i = 0; i < cells_; ++i) ++counts[cell(row, i)];
  for (std::uint64_t r = 0; r < counts.size(); ++r) {
    if (counts[r] != multiplicity(row, r)) return false;
  }
  return true;
}

}  // namespace dpss
