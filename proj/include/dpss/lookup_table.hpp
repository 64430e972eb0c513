#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dpss/exact_arith.hpp"
#include "dpss/random.hpp"

namespace dpss {

/// Static table for the special subset-sampling problem: K slots, slot j
/// (1-based) with count c_j in [0, m] holding probability
/// p_j = min{1, 2^(j+1) c_j / m^2}. Row c (base m+1, slot 1 least significant)
/// has (m^2)^K cells; result r (bit j-1 = slot j) occupies exactly
/// prod_j (r_j ? a_j : m^2 - a_j) of them, where a_j = min{m^2, 2^(j+1) c_j}.
/// Cells are K bits each, packed floor(64/K) to a word.
class LookupTable {
 public:
  static constexpr unsigned kMaxSlots = 8;

  /// The empty table (K = 0): every sample is the empty result.
  LookupTable() = default;

  /// Allocates without filling; call fill() until it returns true.
  /// Throws TableTooLarge when the packed table exceeds budget_words and
  /// std::invalid_argument unless 1 <= K <= kMaxSlots and m >= 2.
  LookupTable(unsigned slots, unsigned m, std::uint64_t budget_words);

  /// Builds completely.
  static LookupTable build(unsigned slots, unsigned m, std::uint64_t budget_words);

  /// Packed size in words, or UINT64_MAX if it does not fit in 64 bits.
  static std::uint64_t words_needed(unsigned slots, unsigned m);
  /// Largest K <= k_max whose table fits the budget (possibly 0).
  static unsigned feasible_slots(unsigned m, unsigned k_max, std::uint64_t budget_words);

  /// Writes up to max_cells more cells; true once the table is complete.
  bool fill(std::uint64_t max_cells);
  bool complete() const { return next_row_ == rows_; }

  unsigned slots() const { return k_; }
  unsigned m() const { return m_; }
  std::uint64_t rows() const { return rows_; }
  std::uint64_t cells_per_row() const { return cells_; }

  /// Throws std::invalid_argument for a wrong length or a count above m.
  std::uint64_t row_index(std::span<const std::uint8_t> config) const;
  std::uint64_t cell(std::uint64_t row, std::uint64_t index) const;

  std::uint64_t sample(std::span<const std::uint8_t> config, RandomSource& src) const;
  std::uint64_t sample_row(std::uint64_t row, RandomSource& src) const {
    return cell(row, src.below(cells_));
  }

  /// Exact Pr(r) (m^2)^K for a configuration.
  std::uint64_t multiplicity(std::uint64_t row, std::uint64_t result) const;
  /// Counts every cell of the row and compares with multiplicity().
  bool verify_row(std::uint64_t row) const;

  std::size_t resident_words() const { return words_.size() + 8; }

 private:
  void put(std::uint64_t index, std::uint64_t value);
  void put_run(std::uint64_t index, std::uint64_t n, std::uint64_t value);

  unsigned k_ = 0;
  unsigned m_ = 0;
  unsigned per_word_ = 0;
  std::uint64_t rows_ = 0;
  std::uint64_t cells_ = 1;
  std::vector<std::uint64_t> words_;

  // fill() cursor
  std::uint64_t next_row_ = 0;
  std::uint64_t next_result_ = 0;
  std::uint64_t left_in_result_ = 0;
  std::uint64_t written_in_row_ = 0;
};

}  // namespace dpss
