#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dpss/bg_structure.hpp"
#include "dpss/item_io.hpp"
#include "dpss/lookup_table.hpp"
#include "dpss/random.hpp"

namespace dpss {

/// How final-level middle buckets are sampled: through the lookup table (with
/// a direct exact coin for slots beyond the table's K), or by direct exact
/// coins only. The direct mode is the cross-check.
enum class FinalLevelMode { Table, Direct };

/// Amortized global rebuilding, or a shadow structure migrated a fixed number
/// of steps per update.
enum class RebuildMode { Amortized, Deamortized };

struct HaltOptions {
  FinalLevelMode final_mode = FinalLevelMode::Table;
  RebuildMode rebuild_mode = RebuildMode::Amortized;
  /// Absolute table budget in words. Unset: DPSS_TABLE_BUDGET_WORDS if set,
  /// else 4 * n0 words.
  std::optional<std::uint64_t> table_budget_words;
  /// De-amortized mode: migration steps (one item or one table chunk each)
  /// per update.
  unsigned migration_steps = 8;
};

/// Everything derived from n0 at (re)build time.
struct HaltParams {
  std::uint64_t n0 = 0;
  std::uint64_t n0_eff = 16;  // max(n0, 16)
  std::uint64_t n1 = 16;      // level-1 N: n0_eff padded to a power of 16
  unsigned log_n1 = 4;
  std::uint64_t n2 = 4;       // level-2 N: log2 N1 rounded up to a power of two
  unsigned log_n2 = 2;
  unsigned m = 2;             // max(2, ceil(log2 log2 n0_eff))
  unsigned k_full = 2;        // max(1, ceil(2 log2 m))
  unsigned k_table = 0;       // slots served by the table, <= k_full
  std::uint64_t table_budget_words = 0;
  unsigned adapter_bound = 5;  // 2 ceil(log2 log2 n0_eff) + 1
};

/// Throws std::invalid_argument when n0 >= 2^60.
HaltParams halt_params(std::uint64_t n0, std::optional<std::uint64_t> table_budget_words);

/// Summary of a successful full-scan audit.
struct HaltAudit {
  std::size_t items = 0;
  std::size_t zero_weight_items = 0;
  std::size_t level2_structures = 0;
  std::size_t final_instances = 0;
  unsigned max_adapter_width = 0;   // l2 - l1 + 1 over all final instances
  unsigned max_occupied_span = 0;   // highest occupied adapter slot + 1
  unsigned adapter_bound = 0;
  unsigned max_final_count = 0;     // largest final-level bucket size
  unsigned max_final_items = 0;
  bool operator==(const HaltAudit&) const = default;
};

class HaltCore;

/// Dynamic parameterized subset sampling: items (id, weight) under insert and
/// delete; query(alpha, beta) returns each live item independently with
/// probability min{w / (alpha * total + beta), 1}.
///
/// Queries use internal scratch space and counters: one query at a time per
/// structure, never concurrently with updates.
class Halt {
 public:
  explicit Halt(HaltOptions options = {});
  explicit Halt(std::span<const Item> items, HaltOptions options = {});
  ~Halt();
  Halt(Halt&&) noexcept;
  Halt& operator=(Halt&&) noexcept;

  /// Throws std::invalid_argument for a live id or a weight >= 2^63.
  void insert(std::uint64_t id, std::uint64_t weight);
  /// Throws std::invalid_argument for an unknown id.
  void erase(std::uint64_t id);

  bool contains(std::uint64_t id) const { return index_.count(id) != 0; }
  std::uint64_t weight(std::uint64_t id) const;
  std::size_t size() const { return items_.size(); }
  u128 total_weight() const { return total_; }
  /// Live items in internal order.
  std::span<const Item> items() const { return items_; }

  /// Throws DegenerateQuery if alpha * total + beta == 0 on a non-empty set
  /// and std::invalid_argument for negative parameters.
  void query(const QueryParams& params, RandomSource& src, std::vector<std::uint64_t>& out);
  std::vector<std::uint64_t> query(const QueryParams& params, RandomSource& src);

  /// Rebuilds from the live items with n0 = size().
  void rebuild();

  /// Full scan of every invariant; throws InvalidState on the first violation.
  HaltAudit audit() const;
  std::size_t resident_words() const;

  const HaltParams& params() const;
  const LookupTable& table() const;
  const BGStructure& level1() const;
  const HaltOptions& options() const { return options_; }
  QueryStats& stats() { return stats_; }
  std::uint64_t rebuild_count() const { return rebuilds_; }
  bool migrating() const { return shadow_ != nullptr; }

 private:
  void after_update();
  void start_migration();
  void migrate(unsigned steps);

  HaltOptions options_;
  std::vector<Item> items_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::size_t zero_items_ = 0;
  u128 total_ = 0;
  std::unique_ptr<HaltCore> core_;
  std::unique_ptr<HaltCore> shadow_;
  std::size_t cursor_ = 0;  // every item at index >= cursor_ is in the shadow
  QueryStats stats_;
  std::uint64_t rebuilds_ = 0;
  std::unique_ptr<QueryWeight> weight_cache_;  // reused while W is unchanged
};

}  // namespace dpss
