#pragma once
// HBRICK counter array: per-bucket unified bitmap, optional levels packed
// into single words bounded by the 72-bit BRAM word width, and dirty-bit
// eviction of overflowed entries into a rank-indexed associative store.

#include <bit>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "assoc_store.hpp"
#include "bits.hpp"
#include "counter_array.hpp"

namespace hbrick {

struct HbrickConfig {
  std::uint32_t base_width = 14;                // w_1
  std::vector<std::uint32_t> opt_widths{8, 7};  // w_2..w_L
  std::vector<std::uint32_t> opt_slots{8, 4};   // k_2..k_L
  std::uint32_t entries_per_bucket = 64;        // k
  std::uint64_t buckets = 0;                    // N; W = N * k
  std::uint32_t assoc_key_bits = 0;             // 0 -> derive log2(W)
  std::uint32_t assoc_capacity = 128;           // J
  std::uint32_t update_latency_cycles = 14;     // T_c, consumed by the pipeline sim
  bool reclaim_on_evict = true;

  static constexpr std::uint32_t kMaxPackedWordBits = 72;

  std::uint32_t levels() const {
    return static_cast<std::uint32_t>(opt_widths.size()) + 1;
  }
  std::uint64_t entries() const { return buckets * entries_per_bucket; }
  std::uint32_t total_width() const {
    return base_width +
           std::accumulate(opt_widths.begin(), opt_widths.end(), 0u);
  }
  std::uint32_t key_bits() const {
    if (assoc_key_bits) return assoc_key_bits;
    return static_cast<std::uint32_t>(std::bit_width(entries()) - 1);
  }

  // Defaults sized for CAIDA-like flow-size tallies: L=3, widths
  // (14, 8, 7) covering 29 bits.
  static HbrickConfig caida_profile(std::uint64_t table_entries) {
    HbrickConfig cfg;
    cfg.buckets = table_entries / cfg.entries_per_bucket;
    cfg.validate();
    return cfg;
  }

  void validate() const {
    if (opt_widths.size() != opt_slots.size())
      throw std::invalid_argument("hbrick: opt_widths/opt_slots size mismatch");
    if (base_width == 0 || base_width > 64)
      throw std::invalid_argument("hbrick: base width must be 1..64");
    const std::uint32_t k = entries_per_bucket;
    if (k == 0 || k > 64 || (k & (k - 1)) != 0)
      throw std::invalid_argument("hbrick: k must be a power of two <= 64");
    if (buckets == 0 || (buckets & (buckets - 1)) != 0)
      throw std::invalid_argument("hbrick: buckets must be a power of two");
    for (std::size_t l = 0; l < opt_widths.size(); ++l) {
      if (opt_widths[l] == 0 || opt_widths[l] > 64)
        throw std::invalid_argument("hbrick: level width must be 1..64");
      if (opt_slots[l] == 0 || opt_slots[l] > k)
        throw std::invalid_argument("hbrick: level slots must be 1..k");
      if (opt_slots[l] * opt_widths[l] > kMaxPackedWordBits)
        throw std::invalid_argument("hbrick: packed level exceeds 72 bits");
    }
    if (total_width() > 64)
      throw std::invalid_argument("hbrick: total width must fit in 64 bits");
  }
};

// Per-level slot positions of one entry. slots[0] is the in-bucket
// position j; slots[l] is the packed slot of optional level l+1.
struct LevelIndex {
  std::vector<std::uint32_t> slots;
  std::uint32_t present_levels() const {
    return static_cast<std::uint32_t>(slots.size());
  }
};

struct HbrickStats {
  std::vector<std::uint64_t> level_occupancy;  // occupied slots per level
  std::uint64_t evictions = 0;
  std::uint64_t packed_shifts = 0;
  std::uint64_t dirty_entries = 0;
  std::uint64_t spill_entries = 0;
  std::uint64_t capacity_violations = 0;
  std::uint64_t max_words_per_op = 0;
};

class HbrickArray final : public CounterArray {
 public:
  using packed_word = unsigned __int128;

  struct Bucket {
    std::vector<std::uint64_t> base;     // k sub-counters of w_1 bits
    std::vector<packed_word> packed;     // one word per optional level
    std::vector<std::uint64_t> segments; // unified bitmap I, one segment per link
    std::uint64_t dirty = 0;             // V
  };

  explicit HbrickArray(HbrickConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    assoc_ = std::make_unique<AssociativeStore>(cfg_.key_bits(),
                                                cfg_.assoc_capacity);
    const std::uint32_t L = cfg_.levels();
    buckets_.resize(cfg_.buckets);
    for (auto& b : buckets_) {
      b.base.assign(cfg_.entries_per_bucket, 0);
      b.packed.assign(L - 1, 0);
      b.segments.assign(L - 1, 0);
    }
    offsets_.resize(L + 1, 0);
    offsets_[1] = cfg_.base_width;
    for (std::uint32_t l = 0; l + 1 < L; ++l)
      offsets_[l + 2] = offsets_[l + 1] + cfg_.opt_widths[l];
  }

  std::uint64_t size() const override { return cfg_.entries(); }
  std::uint64_t capacity() const override {
    // Evicted entries live in the associative store (or its spill map)
    // at full width, so the array never clamps.
    return std::numeric_limits<std::uint64_t>::max();
  }
  const HbrickConfig& config() const { return cfg_; }
  const AssociativeStore& assoc() const { return *assoc_; }
  const Bucket& bucket(std::uint64_t b) const { return buckets_.at(b); }

  // One-pass parallel indexing over the unified bitmap: the slot of each
  // present level is the rank of the entry's flag in the previous segment.
  LevelIndex rank_vector(const Bucket& bk, std::uint32_t j) const {
    if (j >= cfg_.entries_per_bucket)
      throw std::out_of_range("hbrick: entry position out of range");
    LevelIndex iv;
    iv.slots.push_back(j);
    for (std::uint32_t l = 0; l + 1 < cfg_.levels(); ++l) {
      const std::uint32_t pos = iv.slots.back();
      if (!test_bit(bk.segments[l], pos)) break;
      iv.slots.push_back(rank_inclusive(bk.segments[l], pos, segment_bits(l)) - 1);
    }
    return iv;
  }

  std::uint64_t read(std::uint64_t i) const override {
    check_index(i);
    OpGuard guard(this);
    const std::uint64_t b = i / cfg_.entries_per_bucket;
    const std::uint32_t j =
        static_cast<std::uint32_t>(i % cfg_.entries_per_bucket);
    const Bucket& bk = buckets_[b];
    touch(1);  // dirty word
    if (test_bit_dirty(bk, j)) return evicted_value(i);
    return assemble(bk, j);
  }

  std::uint64_t add(std::uint64_t i, std::uint64_t delta) override {
    check_index(i);
    OpGuard guard(this);
    const std::uint64_t b = i / cfg_.entries_per_bucket;
    const std::uint32_t j =
        static_cast<std::uint32_t>(i % cfg_.entries_per_bucket);
    Bucket& bk = buckets_[b];
    touch(1);
    if (test_bit_dirty(bk, j)) {
      const std::uint64_t nv = evicted_value(i) + delta;
      store_evicted(i, nv);
      return nv;
    }
    return write(bk, i, j, assemble(bk, j) + delta);
  }

  std::uint64_t raise_to(std::uint64_t i, std::uint64_t v) override {
    check_index(i);
    OpGuard guard(this);
    const std::uint64_t b = i / cfg_.entries_per_bucket;
    const std::uint32_t j =
        static_cast<std::uint32_t>(i % cfg_.entries_per_bucket);
    Bucket& bk = buckets_[b];
    touch(1);
    if (test_bit_dirty(bk, j)) {
      const std::uint64_t old = evicted_value(i);
      if (v <= old) return old;
      store_evicted(i, v);
      return v;
    }
    const std::uint64_t old = assemble(bk, j);
    if (v <= old) return old;
    return write(bk, i, j, v);
  }

  HbrickStats stats() const {
    HbrickStats s;
    s.level_occupancy.assign(cfg_.levels(), 0);
    for (const auto& bk : buckets_) {
      s.level_occupancy[0] += cfg_.entries_per_bucket;
      for (std::uint32_t l = 0; l + 1 < cfg_.levels(); ++l)
        s.level_occupancy[l + 1] += std::popcount(bk.segments[l]);
      s.dirty_entries += std::popcount(bk.dirty);
    }
    s.evictions = evictions_;
    s.packed_shifts = packed_shifts_;
    s.spill_entries = spill_.size();
    s.capacity_violations = capacity_violations_;
    s.max_words_per_op = max_words_per_op_;
    return s;
  }

 private:
  std::uint32_t segment_bits(std::uint32_t l) const {
    // segment 0 flags base entries, segment l >= 1 flags level-(l+1) slots
    return l == 0 ? cfg_.entries_per_bucket : cfg_.opt_slots[l - 1];
  }

  static packed_word packed_mask(std::uint32_t bits) {
    return (packed_word{1} << bits) - 1;
  }

  std::uint64_t get_slot(const Bucket& bk, std::uint32_t opt, std::uint32_t s) const {
    touch(1);
    const std::uint32_t w = cfg_.opt_widths[opt];
    return static_cast<std::uint64_t>((bk.packed[opt] >> (s * w)) &
                                      packed_mask(w));
  }

  void set_slot(Bucket& bk, std::uint32_t opt, std::uint32_t s, std::uint64_t v) {
    touch(1);
    const std::uint32_t w = cfg_.opt_widths[opt];
    const std::uint32_t sh = s * w;
    bk.packed[opt] =
        (bk.packed[opt] & ~(packed_mask(w) << sh)) | (packed_word{v} << sh);
  }

  // Opens a zero slot at position s with one word-level shift.
  void insert_slot(Bucket& bk, std::uint32_t opt, std::uint32_t s,
                   std::uint32_t occupied) {
    touch(1);
    const std::uint32_t w = cfg_.opt_widths[opt];
    const packed_word low = bk.packed[opt] & packed_mask(s * w);
    const packed_word high = (bk.packed[opt] & ~packed_mask(s * w)) << w;
    bk.packed[opt] = (low | high) & packed_mask(cfg_.opt_slots[opt] * w);
    if (occupied > s) ++packed_shifts_;
  }

  void remove_slot(Bucket& bk, std::uint32_t opt, std::uint32_t s,
                   std::uint32_t occupied) {
    touch(1);
    const std::uint32_t w = cfg_.opt_widths[opt];
    const packed_word low = bk.packed[opt] & packed_mask(s * w);
    const packed_word high = (bk.packed[opt] >> w) & ~packed_mask(s * w);
    bk.packed[opt] = low | high;
    if (occupied > s + 1) ++packed_shifts_;
  }

  bool test_bit_dirty(const Bucket& bk, std::uint32_t j) const {
    return test_bit(bk.dirty, j);
  }

  std::uint64_t assemble(const Bucket& bk, std::uint32_t j) const {
    touch(cfg_.levels());  // base word + all segment words, read in parallel
    const LevelIndex iv = rank_vector(bk, j);
    std::uint64_t v = bk.base[j];
    for (std::uint32_t l = 1; l < iv.present_levels(); ++l)
      v |= get_slot(bk, l - 1, iv.slots[l]) << offsets_[l];
    return v;
  }

  std::uint32_t levels_needed(std::uint64_t v) const {
    const std::uint32_t bits = bit_length(v);
    for (std::uint32_t l = 1; l <= cfg_.levels(); ++l)
      if (bits <= offsets_[l]) return l;
    return cfg_.levels() + 1;
  }

  std::uint64_t write(Bucket& bk, std::uint64_t i, std::uint32_t j,
                      std::uint64_t nv) {
    const std::uint32_t needed = levels_needed(nv);
    LevelIndex iv = rank_vector(bk, j);
    if (needed > iv.present_levels()) {
      bool fits = needed <= cfg_.levels();
      for (std::uint32_t l = iv.present_levels(); fits && l < needed; ++l) {
        // expanding into optional level l+1 consumes a slot there
        touch(1);
        const std::uint32_t occ =
            static_cast<std::uint32_t>(std::popcount(bk.segments[l - 1]));
        if (occ >= cfg_.opt_slots[l - 1]) fits = false;
      }
      if (!fits) {
        evict(bk, i, j, iv, nv);
        return nv;
      }
      while (iv.present_levels() < needed) {
        const std::uint32_t nl = iv.present_levels();  // link index into segments
        std::uint64_t& seg = bk.segments[nl - 1];
        const std::uint32_t occ =
            static_cast<std::uint32_t>(std::popcount(seg));
        const std::uint32_t parent = iv.slots.back();
        const std::uint32_t ins =
            static_cast<std::uint32_t>(std::popcount(seg & low_mask(parent)));
        touch(1);
        seg |= std::uint64_t{1} << parent;
        insert_slot(bk, nl - 1, ins, occ);
        if (nl < cfg_.levels() - 1) {
          touch(1);
          bk.segments[nl] = insert_zero_bit(bk.segments[nl], ins, segment_bits(nl));
        }
        iv.slots.push_back(ins);
      }
    }
    touch(1);
    bk.base[j] = nv & low_mask(cfg_.base_width);
    for (std::uint32_t l = 1; l < iv.present_levels(); ++l)
      set_slot(bk, l - 1, iv.slots[l],
               (nv >> offsets_[l]) & low_mask(cfg_.opt_widths[l - 1]));
    return nv;
  }

  void evict(Bucket& bk, std::uint64_t i, std::uint32_t j,
             const LevelIndex& iv, std::uint64_t value) {
    touch(1);
    bk.dirty |= std::uint64_t{1} << j;
    if (cfg_.reclaim_on_evict) reclaim(bk, iv);
    store_evicted(i, value);
    bk.base[j] = 0;
    ++evictions_;
  }

  // Frees the entry's optional-level slots, deepest level first so the
  // precomputed slot positions stay valid.
  void reclaim(Bucket& bk, const LevelIndex& iv) {
    for (std::uint32_t l = iv.present_levels(); l-- > 1;) {
      const std::uint32_t occ =
          static_cast<std::uint32_t>(std::popcount(bk.segments[l - 1]));
      remove_slot(bk, l - 1, iv.slots[l], occ);
      if (l < cfg_.levels() - 1) {
        touch(1);
        bk.segments[l] = remove_bit(bk.segments[l], iv.slots[l]);
      }
      touch(1);
      bk.segments[l - 1] &= ~(std::uint64_t{1} << iv.slots[l - 1]);
    }
  }

  std::uint64_t evicted_value(std::uint64_t key) const {
    if (auto v = assoc_->lookup(key)) return *v;
    if (auto it = spill_.find(key); it != spill_.end()) return it->second;
    throw std::runtime_error("hbrick: dirty entry missing from associative store");
  }

  void store_evicted(std::uint64_t key, std::uint64_t value) {
    if (assoc_->contains(key)) {
      assoc_->update(key, value);
      return;
    }
    if (auto it = spill_.find(key); it != spill_.end()) {
      it->second = value;
      return;
    }
    if (assoc_->size() < assoc_->capacity()) {
      assoc_->insert(key, value);
    } else {
      // Hardware-infeasible event: keep semantics exact, record the violation.
      spill_.emplace(key, value);
      ++capacity_violations_;
    }
  }

  // Bucket-word access accounting backing the fixed-cost contract.
  struct OpGuard {
    explicit OpGuard(const HbrickArray* a) : arr(a) { arr->op_words_ = 0; }
    ~OpGuard() {
      if (arr->op_words_ > arr->max_words_per_op_)
        arr->max_words_per_op_ = arr->op_words_;
    }
    const HbrickArray* arr;
  };
  void touch(std::uint64_t n) const { op_words_ += n; }

  HbrickConfig cfg_;
  std::vector<std::uint32_t> offsets_;
  std::vector<Bucket> buckets_;
  std::unique_ptr<AssociativeStore> assoc_;
  std::unordered_map<std::uint64_t, std::uint64_t> spill_;
  std::uint64_t evictions_ = 0;
  std::uint64_t packed_shifts_ = 0;
  std::uint64_t capacity_violations_ = 0;
  mutable std::uint64_t op_words_ = 0;
  mutable std::uint64_t max_words_per_op_ = 0;
};

}  // namespace hbrick
