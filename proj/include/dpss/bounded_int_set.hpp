#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dpss {

/// Dynamic set over a universe [0, u) with u <= 256: bitmap for
/// predecessor/successor, a sorted doubly linked list for ordered iteration,
/// a compact handle array (swap-remove on delete) holding the list nodes, and
/// a menu array mapping each member to its handle.
class BoundedIntSet {
 public:
  static constexpr unsigned kMaxUniverse = 256;

  explicit BoundedIntSet(unsigned universe = kMaxUniverse);

  /// Throws std::invalid_argument on duplicates or out-of-universe members.
  static BoundedIntSet build(std::span<const unsigned> members, unsigned universe);

  unsigned universe() const { return universe_; }
  std::size_t size() const { return handles_.size(); }
  bool empty() const { return handles_.empty(); }

  bool contains(unsigned q) const {
    return q < universe_ && ((bits_[q / 64] >> (q % 64)) & 1u) != 0;
  }

  /// Throws std::invalid_argument if q is present / absent / outside the universe.
  void insert(unsigned q);
  void erase(unsigned q);

  /// Smallest member >= q / largest member <= q.
  std::optional<unsigned> successor(unsigned q) const;
  std::optional<unsigned> predecessor(unsigned q) const;

  std::optional<unsigned> min() const;
  std::optional<unsigned> max() const;

  /// Ordered traversal through the linked list.
  template <class F>
  void for_each(F&& f) const {
    for (int h = head_; h != kNil; h = handles_[static_cast<std::size_t>(h)].next) {
      f(static_cast<unsigned>(handles_[static_cast<std::size_t>(h)].value));
    }
  }

  std::vector<unsigned> to_vector() const;

  /// Full consistency check of bitmap, list, handles and menu; throws
  /// InvalidState on the first violation.
  void audit() const;

  /// Machine words held (bitmap, menu, handles).
  std::size_t resident_words() const;

 private:
  static constexpr int kNil = -1;

  struct Node {
    std::uint16_t value;
    std::int16_t prev;
    std::int16_t next;
  };

  void check_range(unsigned q) const;

  unsigned universe_;
  std::array<std::uint64_t, kMaxUniverse / 64> bits_{};
  std::array<std::int16_t, kMaxUniverse> menu_{};
  std::vector<Node> handles_;
  int head_ = kNil;
  int tail_ = kNil;
};

}  // namespace dpss
