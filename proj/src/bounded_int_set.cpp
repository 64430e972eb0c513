#include "dpss/bounded_int_set.hpp"

#include <bit>
#include <stdexcept>
#include <string>

#include "dpss/errors.hpp"

namespace dpss {

BoundedIntSet::BoundedIntSet(unsigned universe) : universe_(universe) {
  if (universe == 0 || universe > kMaxUniverse) {
    throw std::invalid_argument("BoundedIntSet: universe must be in [1, 256]");
  }
  menu_.fill(static_cast<std::int16_t>(kNil));
}

BoundedIntSet BoundedIntSet::build(std::span<const unsigned> members, unsigned universe) {
  BoundedIntSet s(universe);
  for (unsigned q : members) {
    s.check_range(q);
    if (s.contains(q)) throw std::invalid_argument("BoundedIntSet: duplicate member " + std::to_string(q));
    s.bits_[q / 64] |= std::uint64_t{1} << (q % 64);
  }
  // Link in ascending order straight from the bitmap.
  s.handles_.reserve(members.size());
  for (std::size_t w = 0; w < s.bits_.size(); ++w) {
    for (std::uint64_t b = s.bits_[w]; b != 0; b &= b - 1) {
      const unsigned q = static_cast<unsigned>(w * 64) + static_cast<unsigned>(std::countr_zero(b));
      const auto h = static_cast<std::int16_t>(s.handles_.size());
      s.handles_.push_back(Node{static_cast<std::uint16_t>(q), static_cast<std::int16_t>(s.tail_), kNil});
      if (s.tail_ != kNil) s.handles_[static_cast<std::size_t>(s.tail_)].next = h;
      else s.head_ = h;
      s.tail_ = h;
      s.menu_[q] = h;
    }
  }
  return s;
}

void BoundedIntSet::check_range(unsigned q) const {
  if (q >= universe_) {
    throw std::invalid_argument("BoundedIntSet: " + std::to_string(q) + " outside universe " +
                                std::to_string(universe_));
  }
}

void BoundedIntSet::insert(unsigned q) {
  check_range(q);
  if (contains(q)) throw std::invalid_argument("BoundedIntSet: " + std::to_string(q) + " already present");
  const auto pred = q == 0 ? std::nullopt : predecessor(q - 1);
  const auto h = static_cast<std::int16_t>(handles_.size());
  Node node{static_cast<std::uint16_t>(q), kNil, kNil};
  if (pred) {
    const std::int16_t ph = menu_[*pred];
    node.prev = ph;
    node.next = handles_[static_cast<std::size_t>(ph)].next;
    handles_[static_cast<std::size_t>(ph)].next = h;
  } else {
    node.next = static_cast<std::int16_t>(head_);
    head_ = h;
  }
  if (node.next != kNil) handles_[static_cast<std::size_t>(node.next)].prev = h;
  else tail_ = h;
  handles_.push_back(node);
  menu_[q] = h;
  bits_[q / 64] |= std::uint64_t{1} << (q % 64);
}

void BoundedIntSet::erase(unsigned q) {
  check_range(q);
  if (!contains(q)) throw std::invalid_argument("BoundedIntSet: " + std::to_string(q) + " not present");
  const std::int16_t h = menu_[q];
  const Node node = handles_[static_cast<std::size_t>(h)];
  if (node.prev != kNil) handles_[static_cast<std::size_t>(node.prev)].next = node.next;
  else head_ = node.next;
  if (node.next != kNil) handles_[static_cast<std::size_t>(node.next)].prev = node.prev;
  else tail_ = node.prev;

  // Swap-remove: the last handle moves into slot h; repoint its neighbours and menu entry.
  const auto last = static_cast<std::int16_t>(handles_.size() - 1);
  if (h != last) {
    const Node moved = handles_[static_cast<std::size_t>(last)];
    handles_[static_cast<std::size_t>(h)] = moved;
    if (moved.prev != kNil) handles_[static_cast<std::size_t>(moved.prev)].next = h;
    else head_ = h;
    if (moved.next != kNil) handles_[static_cast<std::size_t>(moved.next)].prev = h;
    else tail_ = h;
    menu_[moved.value] = h;
  }
  handles_.pop_back();
  menu_[q] = kNil;
  bits_[q / 64] &= ~(std::uint64_t{1} << (q % 64));
}

std::optional<unsigned> BoundedIntSet::successor(unsigned q) const {
  if (q >= universe_) return std::nullopt;
  std::size_t w = q / 64;
  std::uint64_t word = bits_[w] & (~std::uint64_t{0} << (q % 64));
  for (;;) {
    if (word != 0) return static_cast<unsigned>(w * 64) + static_cast<unsigned>(std::countr_zero(word));
    if (++w == bits_.size()) return std::nullopt;
    word = bits_[w];
  }
}

std::optional<unsigned> BoundedIntSet::predecessor(unsigned q) const {
  if (q >= universe_) q = universe_ - 1;
  std::size_t w = q / 64;
  const unsigned r = q % 64;
  std::uint64_t word = bits_[w] & (r == 63 ? ~std::uint64_t{0} : ((std::uint64_t{1} << (r + 1)) - 1));
  for (;;) {
    if (word != 0) return static_cast<unsigned>(w * 64) + 63u - static_cast<unsigned>(std::countl_zero(word));
    if (w == 0) return std::nullopt;
    word = bits_[--w];
  }
}

std::optional<unsigned> BoundedIntSet::min() const {
  if (head_ == kNil) return std::nullopt;
  return handles_[static_cast<std::size_t>(head_)].value;
}

std::optional<unsigned> BoundedIntSet::max() const {
  if (tail_ == kNil) return std::nullopt;
  return handles_[static_cast<std::size_t>(tail_)].value;
}

std::vector<unsigned> BoundedIntSet::to_vector() const {
  std::vector<unsigned> out;
  out.reserve(size());
  for_each([&](unsigned v) { out.push_back(v); });
  return out;
}

void BoundedIntSet::audit() const {
  std::size_t bit_count = 0;
  for (auto w : bits_) bit_count += static_cast<std::size_t>(std::popcount(w));
  if (bit_count != handles_.size()) throw InvalidState("BoundedIntSet: bitmap and handle counts differ");
  std::size_t seen = 0;
  int prev = kNil;
  int last_value = -1;
  for (int h = head_; h != kNil; h = handles_[static_cast<std::size_t>(h)].next) {
    if (++seen > handles_.size()) throw InvalidState("BoundedIntSet: list cycle");
    const Node& node = handles_[static_cast<std::size_t>(h)];
    if (node.prev != prev) throw InvalidState("BoundedIntSet: broken back link");
    if (static_cast<int>(node.value) <= last_value) throw InvalidState("BoundedIntSet: list not ascending");
    if (!contains(node.value)) throw InvalidState("BoundedIntSet: listed value missing from bitmap");
    if (menu_[node.value] != h) throw InvalidState("BoundedIntSet: menu does not address the node");
    last_value = node.value;
    prev = h;
  }
  if (prev != tail_) throw InvalidState("BoundedIntSet: tail mismatch");
  if (seen != handles_.size()) throw InvalidState("BoundedIntSet: list misses live handles");
  for (unsigned q = 0; q < universe_; ++q) {
    if (!contains(q) && menu_[q] != kNil) throw InvalidState("BoundedIntSet: stale menu entry");
  }
}

std::size_t BoundedIntSet::resident_words() const {
  return bits_.size() + (menu_.size() * sizeof(std::int16_t) + 7) / 8 +
         (handles_.capacity() * sizeof(Node) + 7) / 8 + 2;
}

}  // namespace dpss
