#include "dpss/halt.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <string>

#include "dpss/errors.hpp"

namespace dpss {

namespace {

constexpr std::uint64_t kMaxWeight = std::uint64_t{1} << 63;
constexpr std::uint64_t kMaxN0 = std::uint64_t{1} << 60;
constexpr unsigned kLevel1Groups = BGStructure::kBuckets / 4;

unsigned ceil_log2_u64(std::uint64_t x) { return x <= 1 ? 0 : 64 - static_cast<unsigned>(std::countl_zero(x - 1)); }
unsigned floor_log2_u64(std::uint64_t x) { return 63 - static_cast<unsigned>(std::countl_zero(x)); }

std::optional<std::uint64_t> budget_from_env() {
  const char* v = std::getenv("DPSS_TABLE_BUDGET_WORDS");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long words = std::strtoull(v, &end, 10);
  if (*end != '\0') throw std::invalid_argument("DPSS_TABLE_BUDGET_WORDS must be an unsigned integer");
  return words;
}


// Z-level instance under one level-2 group: its items are the level-2
// buckets b = base + off (off < L2) with count c = |B_Y(b)| and weight
// 2^(b+1) c, which lands in bucket b + 1 + floor(log2 c). The bucket arrays
// are the adapter: slot s holds bucket l1 + s with l1 = base + 1.
struct FinalInstance {
  static constexpr unsigned kMaxItems = 8;
  static constexpr unsigned kMaxSlots = 16;

  std::uint8_t base = 0;
  std::uint8_t size = 0;
  std::uint16_t nonempty = 0;  // bit s set iff slot s is non-empty
  std::array<std::uint8_t, kMaxItems> count{};
  std::array<std::uint8_t, kMaxItems> pos{};
  std::array<std::uint8_t, kMaxSlots> slot_size{};
  std::array<std::array<std::uint8_t, kMaxItems>, kMaxSlots> slot_items{};

  static unsigned slot_of(unsigned off, unsigned c) { return off + floor_log2_u64(c); }

  u128 weight_of(unsigned off) const { return static_cast<u128>(count[off]) << (base + off + 1); }

  void set(unsigned off, unsigned c) {
    if (off >= kMaxItems || c > 255) throw InvalidState("final-level instance: offset or count out of range");
    if (const unsigned old = count[off]; old != 0) {
      const unsigned s = slot_of(off, old);
      const unsigned t = pos[off];
      const std::uint8_t last = slot_items[s][--slot_size[s]];
      slot_items[s][t] = last;
      pos[last] = static_cast<std::uint8_t>(t);
      if (slot_size[s] == 0) nonempty &= static_cast<std::uint16_t>(~(1u << s));
      --size;
    }
    count[off] = static_cast<std::uint8_t>(c);
    if (c != 0) {
      const unsigned s = slot_of(off, c);
      if (s >= kMaxSlots || slot_size[s] >= kMaxItems) throw InvalidState("final-level instance: slot overflow");
      pos[off] = slot_size[s];
      slot_items[s][slot_size[s]++] = static_cast<std::uint8_t>(off);
      nonempty |= static_cast<std::uint16_t>(1u << s);
      ++size;
    }
  }
};

// Slots whose bucket index lies in [lo, hi], as a mask over the 16 slots.
std::uint32_t slot_mask(std::int64_t lo, std::int64_t hi) {
  lo = std::max<std::int64_t>(lo, 0);
  hi = std::min<std::int64_t>(hi, FinalInstance::kMaxSlots - 1);
  if (lo > hi) return 0;
  const std::uint32_t upto = (hi >= 31) ? ~0u : ((1u << (hi + 1)) - 1);
  return upto & ~((1u << lo) - 1);
}

struct FinalBounds {
  std::int64_t i1;  // buckets <= i1: every item has p_x <= 2/m^2
  std::int64_t i2;  // buckets >= i2: every item has p_x = 1
};

}  // namespace

HaltParams halt_params(std::uint64_t n0, std::optional<std::uint64_t> table_budget_words) {
  if (n0 >= kMaxN0) throw std::invalid_argument("HALT supports fewer than 2^60 items");
  HaltParams p;
  p.n0 = n0;
  p.n0_eff = std::max<std::uint64_t>(n0, 16);
  p.n1 = pad_to_power_of_16(p.n0_eff);
  p.log_n1 = static_cast<unsigned>(std::countr_zero(p.n1));
  p.n2 = pad_to_power_of_2(p.log_n1);
  p.log_n2 = static_cast<unsigned>(std::countr_zero(p.n2));
  const unsigned loglog = ceil_log2_u64(ceil_log2_u64(p.n0_eff));
  // ceil(log2 log2 x) = ceil(log2 ceil(log2 x)) for x >= 2.
  p.m = std::max(2u, loglog);
  p.k_full = std::max(1u, ceil_log2_u64(static_cast<std::uint64_t>(p.m) * p.m));
  p.adapter_bound = 2 * loglog + 1;
  if (table_budget_words) p.table_budget_words = *table_budget_words;
  else if (auto env = budget_from_env()) p.table_budget_words = *env;
  else p.table_budget_words = 4 * p.n0_eff;
  p.k_table = LookupTable::feasible_slots(p.m, p.k_full, p.table_budget_words);
  return p;
}

// ---------------------------------------------------------------------------

class HaltCore {
 public:
  HaltCore(const HaltParams& p, FinalLevelMode mode, bool fill_table)
      : p_(p),
        mode_(mode),
        s1_(p.n1),
        skip1_(Rational(MultiWordInt(1), MultiWordInt(p.n1) * p.n1)),
        skip2_(Rational(MultiWordInt(1), MultiWordInt(p.n2) * p.n2)),
        skip3_(Rational(MultiWordInt(2), MultiWordInt(p.m * p.m))),
        m2_(p.m * p.m) {
    locator_.reserve(2 * p.n0_eff + 16);
    if (p.k_table > 0) {
      table_ = LookupTable(p.k_table, p.m, p.table_budget_words);
      if (fill_table) table_.fill(~std::uint64_t{0});
    }
  }

  const HaltParams& params() const { return p_; }
  LookupTable& table() { return table_; }
  const LookupTable& table() const { return table_; }
  const BGStructure& level1() const { return s1_; }
  std::size_t size() const { return s1_.size(); }
  bool contains(std::uint64_t id) const { return locator_.count(id) != 0; }

  void insert(std::uint64_t id, std::uint64_t weight) {
    const unsigned i = bucket_of(weight);
    const std::uint64_t before = s1_.bucket_size(i);
    locator_.emplace(id, s1_.insert(id, weight));
    update_level2(i, before, before + 1);
  }

  void erase(std::uint64_t id) {
    const auto it = locator_.find(id);
    const Location loc = it->second;
    locator_.erase(it);
    const std::uint64_t before = s1_.bucket_size(loc.bucket);
    if (auto moved = s1_.erase(loc)) locator_[*moved] = loc;
    update_level2(loc.bucket, before, before - 1);
  }

  void query(const QueryWeight& w, RandomSource& src, std::vector<std::uint64_t>& out, QueryStats* stats) {
    if (s1_.size() == 0) return;
    if (&w != bounds_for_ || w.value() != bounds_value_) {
      bounds_ = FinalBounds{floor_log2(Rational(w.value().num(), w.value().den() * m2_)), w.ceil_log2()};
      bounds_for_ = &w;
      bounds_value_ = w.value();
    }
    stats_ = stats;
    Level1Next next(*this);
    bg_query(s1_, w, skip1_, next, src, out, stats);
  }

  void audit(HaltAudit& a) const;
  std::size_t resident_words() const;

 private:
  struct Level2 {
    explicit Level2(const HaltParams& p)
        : y(p.n2), finals((BGStructure::kBuckets + p.log_n2 - 1) / p.log_n2) {
      for (std::size_t k = 0; k < finals.size(); ++k) finals[k].base = static_cast<std::uint8_t>(k * p.log_n2);
    }
    BGStructure y;
    std::array<Location, BGStructure::kBuckets> where{};
    std::vector<FinalInstance> finals;
  };

  // PSS sample of Y_j for a significant level-1 group j: a level-2 query.
  class Level1Next : public NextLevelSampler {
   public:
    explicit Level1Next(HaltCore& h) : h_(h) {}
    void sample_group(unsigned group, const QueryWeight& w, RandomSource& src,
                      std::vector<unsigned>& candidates) override {
      Level2& l = *h_.l2_[group];
      Level2Next next(h_, l);
      std::vector<std::uint64_t>& ids = h_.level2_ids_;
      ids.clear();
      bg_query(l.y, w, h_.skip2_, next, src, ids, h_.stats_);
      for (auto id : ids) candidates.push_back(static_cast<unsigned>(id));
    }

   private:
    HaltCore& h_;
  };

  // PSS sample of Z_k for a significant level-2 group k: the final level.
  class Level2Next : public NextLevelSampler {
   public:
    Level2Next(HaltCore& h, const Level2& l) : h_(h), l_(l) {}
    void sample_group(unsigned group, const QueryWeight& w, RandomSource& src,
                      std::vector<unsigned>& candidates) override {
      h_.query_final(l_.finals[group], w, src, candidates);
    }

   private:
    HaltCore& h_;
    const Level2& l_;
  };

  void update_level2(unsigned i, std::uint64_t before, std::uint64_t after);
  void query_final(const FinalInstance& f, const QueryWeight& w, RandomSource& src, std::vector<unsigned>& out);

  HaltParams p_;
  FinalLevelMode mode_;
  BGStructure s1_;
  std::unordered_map<std::uint64_t, Location> locator_;
  std::array<std::unique_ptr<Level2>, kLevel1Groups> l2_;
  LookupTable table_;
  SkipSampler skip1_, skip2_, skip3_;
  MultiWordInt m2_;

  // per-query state
  FinalBounds bounds_{};
  const QueryWeight* bounds_for_ = nullptr;
  Rational bounds_value_;
  QueryStats* stats_ = nullptr;
  std::vector<std::uint64_t> level2_ids_;
};

void HaltCore::update_level2(unsigned i, std::uint64_t before, std::uint64_t after) {
  const unsigned j = s1_.group_of(i);
  auto& lp = l2_[j];
  if (!lp) lp = std::make_unique<Level2>(p_);
  Level2& l = *lp;
  const unsigned L2 = p_.log_n2;
  if (before != 0) {
    const Location loc = l.where[i];
    const std::size_t c = l.y.bucket_size(loc.bucket);
    if (auto moved = l.y.erase(loc)) l.where[*moved] = loc;
    l.finals[loc.bucket / L2].set(loc.bucket % L2, static_cast<unsigned>(c - 1));
  }
  if (after != 0) {
    const Location loc = l.y.insert(i, static_cast<u128>(after) << (i + 1));
    l.where[i] = loc;
    l.finals[loc.bucket / L2].set(loc.bucket % L2, static_cast<unsigned>(l.y.bucket_size(loc.bucket)));
  }
  if (l.y.size() == 0) lp.reset();
}

void HaltCore::query_final(const FinalInstance& f, const QueryWeight& w, RandomSource& src,
                           std::vector<unsigned>& out) {
  QueryStats* stats = stats_;
  if (stats) ++stats->final_level_calls;
  if (f.size == 0) return;
  const std::int64_t l1 = f.base + 1;  // bucket index of slot 0
  const std::int64_t i1 = bounds_.i1;
  const std::int64_t i2 = bounds_.i2;
  const std::uint64_t m = p_.m;
  auto emit_item = [&](unsigned off) { out.push_back(f.base + off); };

  // Skip pass at rate 2/m^2 over buckets <= i1; at most |Z| <= m items.
  if (std::uint32_t low = f.nonempty & slot_mask(0, i1 - l1)) {
    const std::uint64_t k = skip3_.geo().sample(src, m + 1);
    if (k <= m) {
      std::uint64_t position = 0;
      for (; low != 0; low &= low - 1) {
        const unsigned s = static_cast<unsigned>(std::countr_zero(low));
        for (unsigned t = 0; t < f.slot_size[s]; ++t) {
          const unsigned off = f.slot_items[s][t];
          if (++position < k) continue;
          const u128 weight = f.weight_of(off);
          if (position == k) {
            // p_x / (2/m^2) = weight m^2 / (2W)
            if (w.compare(weight, m * m, 2) > 0) {
              throw InvalidState("final level: insignificant item with p_x > 2/m^2");
            }
            if (w.coin(src, weight, m * m, 2)) emit_item(off);
          } else if (w.coin(src, weight)) {
            emit_item(off);
          }
        }
      }
    }
  }

  // Certain buckets >= i2: every item.
  for (std::uint32_t high = f.nonempty & slot_mask(i2 - l1, FinalInstance::kMaxSlots); high != 0; high &= high - 1) {
    const unsigned s = static_cast<unsigned>(std::countr_zero(high));
    for (unsigned t = 0; t < f.slot_size[s]; ++t) emit_item(f.slot_items[s][t]);
  }

  // Middle buckets i1 + j, j = 1 .. i2 - i1 - 1.
  if ((f.nonempty & slot_mask(i1 + 1 - l1, i2 - 1 - l1)) == 0) return;
  const std::int64_t middle = i2 - i1 - 1;
  if (middle > static_cast<std::int64_t>(p_.k_full)) throw InvalidState("final level: middle range exceeds K");
  auto count_at = [&](std::int64_t bucket) -> unsigned {
    const std::int64_t s = bucket - l1;
    return (s >= 0 && s < FinalInstance::kMaxSlots) ? f.slot_size[static_cast<std::size_t>(s)] : 0u;
  };
  std::array<unsigned, FinalInstance::kMaxSlots> candidates{};
  unsigned n_candidates = 0;
  std::int64_t j = 1;
  if (mode_ == FinalLevelMode::Table && p_.k_table > 0) {
    std::array<std::uint8_t, LookupTable::kMaxSlots> config{};
    bool any = false;
    for (unsigned t = 1; t <= p_.k_table; ++t) {
      config[t - 1] = static_cast<std::uint8_t>(t <= middle ? count_at(i1 + t) : 0u);
      any = any || config[t - 1] != 0;
    }
    if (any) {
      const std::uint64_t r = table_.sample(std::span<const std::uint8_t>(config.data(), p_.k_table), src);
      if (stats) ++stats->table_samples;
      for (std::uint64_t bits = r; bits != 0; bits &= bits - 1) {
        const unsigned t = static_cast<unsigned>(std::countr_zero(bits)) + 1;
        const std::int64_t bucket = i1 + t;
        const unsigned c = config[t - 1];
        if (stats) ++stats->table_bits;
        // min{1, 2^(i+1) c / W} / p_t with p_t = a / m^2, a = min{m^2, 2^(t+1) c}
        const std::uint64_t a = std::min<std::uint64_t>(m * m, static_cast<std::uint64_t>(c) << (t + 1));
        const u128 next_weight = static_cast<u128>(c) << (bucket + 1);
        bool ok;
        bool accepted;
        if (w.compare(next_weight) >= 0) {
          ok = m * m <= a && 2 * m * m >= a;
          accepted = ok && ber_fraction(src, m * m, a);
        } else {
          ok = w.compare(next_weight, m * m, a) <= 0 && w.compare(next_weight, 2 * m * m, a) >= 0;
          accepted = ok && w.coin(src, next_weight, m * m, a);
        }
        if (!ok) throw InvalidState("final level: table acceptance ratio outside [1/2, 1]");
        if (accepted) {
          if (stats) ++stats->table_accepts;
          candidates[n_candidates++] = static_cast<unsigned>(bucket);
        }
      }
    }
    j = p_.k_table + 1;
  }
  for (; j <= middle; ++j) {
    const std::int64_t bucket = i1 + j;
    const unsigned c = count_at(bucket);
    if (c == 0) continue;
    if (stats) ++stats->direct_slots;
    if (w.coin(src, static_cast<u128>(c) << (bucket + 1))) {
      candidates[n_candidates++] = static_cast<unsigned>(bucket);
    }
  }
  for (unsigned q = 0; q < n_candidates; ++q) {
    const unsigned bucket = candidates[q];
    const unsigned s = bucket - static_cast<unsigned>(l1);
    const auto& items = f.slot_items[s];
    extract_bucket(
        bucket, f.slot_size[s], [&](std::uint64_t t) { return f.weight_of(items[t]); }, w, src,
        [&](std::uint64_t t) { emit_item(items[t]); }, stats);
  }
}

void HaltCore::audit(HaltAudit& a) const {
  s1_.audit();
  if (s1_.padded_n() != p_.n1) throw InvalidState("level 1: N differs from the build parameters");
  if (locator_.size() != s1_.size()) throw InvalidState("locator size differs from level-1 size");
  for (const auto& [id, loc] : locator_) {
    if (loc.bucket >= BGStructure::kBuckets || loc.index >= s1_.bucket_size(loc.bucket) ||
        s1_.bucket(loc.bucket)[loc.index].key != id) {
      throw InvalidState("locator does not resolve id " + std::to_string(id));
    }
  }
  const unsigned L1 = p_.log_n1;
  const unsigned L2 = p_.log_n2;
  const unsigned width = L2 + floor_log2_u64(L1);
  a.adapter_bound = p_.adapter_bound;
  for (unsigned j = 0; j < kLevel1Groups; ++j) {
    const bool nonempty = s1_.nonempty_groups().contains(j);
    const auto& lp = l2_[j];
    if (nonempty != (lp != nullptr)) throw InvalidState("level 2: structure presence differs for group " + std::to_string(j));
    if (!lp) continue;
    const Level2& l = *lp;
    ++a.level2_structures;
    l.y.audit();
    if (l.y.padded_n() != p_.n2) throw InvalidState("level 2: N differs from the build parameters");
    std::size_t expect = 0;
    for (unsigned i = s1_.group_first_bucket(j); i <= s1_.group_last_bucket(j); ++i) {
      const std::size_t sz = s1_.bucket_size(i);
      if (sz == 0) continue;
      ++expect;
      const Location loc = l.where[i];
      if (loc.bucket >= BGStructure::kBuckets || loc.index >= l.y.bucket_size(loc.bucket) ||
          l.y.bucket(loc.bucket)[loc.index].key != i) {
        throw InvalidState("level 2: no item for level-1 bucket " + std::to_string(i));
      }
      if (l.y.bucket(loc.bucket)[loc.index].weight != s1_.next_level_weight(i)) {
        throw InvalidState("level 2: weight of item " + std::to_string(i) + " is not 2^(i+1)|B(i)|");
      }
    }
    if (expect != l.y.size()) throw InvalidState("level 2: item count differs from non-empty level-1 buckets");
    for (std::size_t k = 0; k < l.finals.size(); ++k) {
      const FinalInstance& f = l.finals[k];
      if (f.base != k * L2) throw InvalidState("final level: wrong base");
      unsigned items = 0;
      for (unsigned off = 0; off < FinalInstance::kMaxItems; ++off) {
        const unsigned b = f.base + off;
        const std::size_t c = (off < L2 && b < BGStructure::kBuckets) ? l.y.bucket_size(b) : 0;
        if (f.count[off] != c) {
          throw InvalidState("final level: count of level-2 bucket " + std::to_string(b) + " is stale");
        }
        if (c == 0) continue;
        ++items;
        const unsigned s = FinalInstance::slot_of(off, f.count[off]);
        if (s >= width) throw InvalidState("final level: item outside the adapter range");
        if (f.pos[off] >= f.slot_size[s] || f.slot_items[s][f.pos[off]] != off) {
          throw InvalidState("final level: slot list does not hold its item");
        }
        // Weight identity: w(z_b) = 2^(b+1) |B_Y(b)| and bucket floor(log2 w).
        if (bucket_of(f.weight_of(off)) != f.base + 1 + s || f.weight_of(off) != l.y.next_level_weight(b)) {
          throw InvalidState("final level: weight identity fails for level-2 bucket " + std::to_string(b));
        }
      }
      unsigned listed = 0;
      for (unsigned s = 0; s < FinalInstance::kMaxSlots; ++s) {
        listed += f.slot_size[s];
        if ((f.slot_size[s] != 0) != (((f.nonempty >> s) & 1u) != 0)) {
          throw InvalidState("final level: non-empty slot mask is stale");
        }
        if (f.slot_size[s] > p_.m) throw InvalidState("final level: bucket count exceeds m");
        a.max_final_count = std::max<unsigned>(a.max_final_count, f.slot_size[s]);
        if (f.slot_size[s] != 0) a.max_occupied_span = std::max(a.max_occupied_span, s + 1);
      }
      if (listed != items || f.size != items) throw InvalidState("final level: slot lists and counts disagree");
      if (items > p_.m) throw InvalidState("final level: more than m items");
      a.max_final_items = std::max(a.max_final_items, items);
      if (items != 0) {
        ++a.final_instances;
        a.max_adapter_width = std::max(a.max_adapter_width, width);
      }
    }
  }
  if (a.max_adapter_width > p_.adapter_bound) throw InvalidState("adapter range exceeds 2 ceil(log2 log2 n0) + 1");
  if (p_.k_table > 0 && (!table_.complete() || table_.slots() != p_.k_table || table_.m() != p_.m)) {
    throw InvalidState("lookup table does not match the build parameters");
  }
}

std::size_t HaltCore::resident_words() const {
  std::size_t words = 32 + s1_.resident_words() + table_.resident_words();
  // Hash nodes (key, value, next) plus the bucket array.
  words += locator_.bucket_count() + locator_.size() * 3;
  for (const auto& lp : l2_) {
    if (!lp) continue;
    words += lp->y.resident_words() + sizeof(lp->where) / 8 + lp->finals.size() * sizeof(FinalInstance) / 8;
  }
  return words;
}

// ---------------------------------------------------------------------------

Halt::Halt(HaltOptions options) : options_(options) {
  core_ = std::make_unique<HaltCore>(halt_params(0, options_.table_budget_words), options_.final_mode, true);
}

Halt::Halt(std::span<const Item> items, HaltOptions options) : options_(options) {
  items_.reserve(items.size());
  index_.reserve(2 * items.size() + 16);
  for (const auto& it : items) {
    if (it.weight >= kMaxWeight) throw std::invalid_argument("item weight must be below 2^63");
    if (!index_.emplace(it.id, static_cast<std::uint32_t>(items_.size())).second) {
      throw std::invalid_argument("duplicate item id " + std::to_string(it.id));
    }
    items_.push_back(it);
    total_ += it.weight;
    if (it.weight == 0) ++zero_items_;
  }
  core_ = std::make_unique<HaltCore>(halt_params(items_.size(), options_.table_budget_words), options_.final_mode,
                                     true);
  for (const auto& it : items_) {
    if (it.weight != 0) core_->insert(it.id, it.weight);
  }
}

Halt::~Halt() = default;
Halt::Halt(Halt&&) noexcept = default;
Halt& Halt::operator=(Halt&&) noexcept = default;

std::uint64_t Halt::weight(std::uint64_t id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw std::invalid_argument("unknown item id " + std::to_string(id));
  return items_[it->second].weight;
}

void Halt::insert(std::uint64_t id, std::uint64_t weight) {
  if (weight >= kMaxWeight) throw std::invalid_argument("item weight must be below 2^63");
  if (items_.size() >= kMaxN0) throw std::invalid_argument("too many items");
  if (!index_.emplace(id, static_cast<std::uint32_t>(items_.size())).second) {
    throw std::invalid_argument("item id " + std::to_string(id) + " is already live");
  }
  items_.push_back(Item{id, weight});
  total_ += weight;
  if (weight == 0) {
    ++zero_items_;
  } else {
    core_->insert(id, weight);
    if (shadow_) shadow_->insert(id, weight);
  }
  after_update();
}

void Halt::erase(std::uint64_t id) {
  const auto it = index_.find(id);
  if (it == index_.end()) throw std::invalid_argument("unknown item id " + std::to_string(id));
  const std::uint32_t at = it->second;
  const Item item = items_[at];
  index_.erase(it);
  if (at + 1 != items_.size()) {
    items_[at] = items_.back();
    index_[items_[at].id] = at;
  }
  items_.pop_back();
  cursor_ = std::min(cursor_, items_.size());
  total_ -= item.weight;
  if (item.weight == 0) {
    --zero_items_;
  } else {
    core_->erase(id);
    if (shadow_ && shadow_->contains(id)) shadow_->erase(id);
  }
  after_update();
}

void Halt::after_update() {
  const std::uint64_t n0 = core_->params().n0;
  const std::uint64_t n = items_.size();
  const bool out_of_range = n > 2 * core_->params().n0_eff || 2 * n < n0;
  if (options_.rebuild_mode == RebuildMode::Amortized) {
    if (out_of_range) rebuild();
    return;
  }
  if (out_of_range && !shadow_) start_migration();
  if (shadow_) migrate(options_.migration_steps);
}

void Halt::start_migration() {
  shadow_ = std::make_unique<HaltCore>(halt_params(items_.size(), options_.table_budget_words), options_.final_mode,
                                       false);
  cursor_ = items_.size();
}

void Halt::migrate(unsigned steps) {
  // One step moves one item or fills 512 table cells.
  for (; steps != 0; --steps) {
    if (cursor_ > 0) {
      const Item& it = items_[--cursor_];
      if (it.weight != 0 && !shadow_->contains(it.id)) shadow_->insert(it.id, it.weight);
    } else if (!shadow_->table().complete()) {
      shadow_->table().fill(512);
    } else {
      core_ = std::move(shadow_);
      ++rebuilds_;
      return;
    }
  }
}

void Halt::rebuild() {
  shadow_.reset();
  cursor_ = 0;
  core_ = std::make_unique<HaltCore>(halt_params(items_.size(), options_.table_budget_words), options_.final_mode,
                                     true);
  for (const auto& it : items_) {
    if (it.weight != 0) core_->insert(it.id, it.weight);
  }
  ++rebuilds_;
}

void Halt::query(const QueryParams& params, RandomSource& src, std::vector<std::uint64_t>& out) {
  const Rational w = parameterized_weight(params, total_);
  ++stats_.queries;
  if (items_.empty()) return;
  if (w.is_zero()) throw DegenerateQuery();
  if (!weight_cache_ || weight_cache_->value() != w) weight_cache_ = std::make_unique<QueryWeight>(w);
  core_->query(*weight_cache_, src, out, &stats_);
}

std::vector<std::uint64_t> Halt::query(const QueryParams& params, RandomSource& src) {
  std::vector<std::uint64_t> out;
  query(params, src, out);
  return out;
}

HaltAudit Halt::audit() const {
  HaltAudit a;
  core_->audit(a);
  a.items = items_.size();
  a.zero_weight_items = zero_items_;
  if (index_.size() != items_.size()) throw InvalidState("id index size differs from the item count");
  u128 total = 0;
  std::size_t zeros = 0, positive = 0;
  for (std::size_t k = 0; k < items_.size(); ++k) {
    const auto it = index_.find(items_[k].id);
    if (it == index_.end() || it->second != k) throw InvalidState("id index does not resolve item " + std::to_string(k));
    total += items_[k].weight;
    if (items_[k].weight == 0) {
      ++zeros;
      if (core_->contains(items_[k].id)) throw InvalidState("zero-weight item inside the hierarchy");
    } else {
      ++positive;
      if (!core_->contains(items_[k].id)) throw InvalidState("item missing from the hierarchy");
    }
  }
  if (zeros != zero_items_ || positive != core_->size()) throw InvalidState("zero-weight bookkeeping is stale");
  if (total != total_ || total != core_->level1().total_weight() ) throw InvalidState("total weight is stale");
  return a;
}

std::size_t Halt::resident_words() const {
  std::size_t words = 16 + core_->resident_words() + items_.capacity() * 2;
  words += index_.bucket_count() + index_.size() * 3;
  if (shadow_) words += shadow_->resident_words();
  return words;
}

const HaltParams& Halt::params() const { return core_->params(); }
const LookupTable& Halt::table() const { return core_->table(); }
const BGStructure& Halt::level1() const { return core_->level1(); }

}  // namespace dpss
