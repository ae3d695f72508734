#pragma once
// Reference BRICK counter array: bucketized multi-level sub-counters linked
// by per-level rank-indexed bitmaps, with migration of exhausted buckets to
// spare full-width buckets.

#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bits.hpp"
#include "counter_array.hpp"

namespace hbrick {

struct BrickConfig {
  std::vector<std::uint32_t> widths;  // w_1..w_L
  std::vector<std::uint32_t> slots;   // k_1..k_L; slots[0] = k
  std::uint64_t buckets = 0;          // N; W = N * k
  std::uint32_t spare_buckets = 100;  // J

  std::uint32_t levels() const { return static_cast<std::uint32_t>(widths.size()); }
  std::uint32_t entries_per_bucket() const { return slots[0]; }
  std::uint64_t entries() const { return buckets * slots[0]; }
  std::uint32_t total_width() const {
    return std::accumulate(widths.begin(), widths.end(), 0u);
  }

  void validate() const {
    if (widths.empty() || widths.size() != slots.size())
      throw std::invalid_argument("brick: widths/slots size mismatch");
    if (buckets == 0 || (buckets & (buckets - 1)) != 0)
      throw std::invalid_argument("brick: buckets must be a power of two");
    if (slots[0] == 0 || slots[0] > 64 || (slots[0] & (slots[0] - 1)) != 0)
      throw std::invalid_argument("brick: k must be a power of two <= 64");
    for (std::size_t l = 0; l < widths.size(); ++l) {
      if (widths[l] == 0 || widths[l] > 64)
        throw std::invalid_argument("brick: level width must be 1..64");
      if (slots[l] == 0 || slots[l] > slots[0])
        throw std::invalid_argument("brick: slot counts must not grow");
      if (l > 0 && slots[l] > slots[l - 1])
        throw std::invalid_argument("brick: slot counts must be non-increasing");
    }
  }
};

class BrickArray final : public CounterArray {
 public:
  explicit BrickArray(BrickConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    buckets_.resize(cfg_.buckets);
    for (auto& b : buckets_) {
      b.level.resize(cfg_.levels());
      for (std::uint32_t l = 0; l < cfg_.levels(); ++l)
        b.level[l].assign(cfg_.slots[l], 0);
      b.bitmap.assign(cfg_.levels() > 0 ? cfg_.levels() - 1 : 0, 0);
    }
    offsets_.resize(cfg_.levels() + 1, 0);
    for (std::uint32_t l = 0; l < cfg_.levels(); ++l)
      offsets_[l + 1] = offsets_[l] + cfg_.widths[l];
  }

  std::uint64_t size() const override { return cfg_.entries(); }
  std::uint64_t capacity() const override {
    // Migrated buckets hold full 64-bit values, so the array never clamps.
    return std::numeric_limits<std::uint64_t>::max();
  }
  const BrickConfig& config() const { return cfg_; }
  std::uint64_t migrations() const { return migrations_; }
  std::uint32_t spares_used() const {
    return static_cast<std::uint32_t>(spares_.size());
  }

  std::uint64_t read(std::uint64_t i) const override {
    check_index(i);
    const std::uint64_t b = i / cfg_.slots[0];
    const std::uint32_t j = static_cast<std::uint32_t>(i % cfg_.slots[0]);
    const Bucket& bk = buckets_[b];
    if (bk.spare >= 0) return spares_[bk.spare][j];
    return assemble(bk, j);
  }

  std::uint64_t add(std::uint64_t i, std::uint64_t delta) override {
    check_index(i);
    const std::uint64_t old = read(i);
    return write(i, old + delta);
  }

  std::uint64_t raise_to(std::uint64_t i, std::uint64_t v) override {
    check_index(i);
    const std::uint64_t old = read(i);
    return v > old ? write(i, v) : old;
  }

 private:
  struct Bucket {
    std::vector<std::vector<std::uint64_t>> level;  // level[l], l = 0..L-1
    std::vector<std::uint64_t> bitmap;              // bitmap[l] flags level-l slots
    std::int64_t spare = -1;
  };

  // Slot positions of entry j, one per occupied level (recursive indexing).
  std::vector<std::uint32_t> path_of(const Bucket& bk, std::uint32_t j) const {
    std::vector<std::uint32_t> path{j};
    for (std::uint32_t l = 0; l + 1 < cfg_.levels(); ++l) {
      const std::uint32_t pos = path.back();
      if (!test_bit(bk.bitmap[l], pos)) break;
      path.push_back(rank_inclusive(bk.bitmap[l], pos, cfg_.slots[l]) - 1);
    }
    return path;
  }

  std::uint64_t assemble(const Bucket& bk, std::uint32_t j) const {
    std::uint64_t v = 0;
    const auto path = path_of(bk, j);
    for (std::size_t l = 0; l < path.size(); ++l)
      v |= bk.level[l][path[l]] << offsets_[l];
    return v;
  }

  // Number of levels the value occupies; levels()+1 means it does not fit.
  std::uint32_t levels_needed(std::uint64_t v) const {
    const std::uint32_t bits = bit_length(v);
    for (std::uint32_t l = 1; l <= cfg_.levels(); ++l)
      if (bits <= offsets_[l]) return std::max(l, 1u);
    return cfg_.levels() + 1;
  }

  std::uint64_t write(std::uint64_t i, std::uint64_t nv) {
    const std::uint64_t b = i / cfg_.slots[0];
    const std::uint32_t j = static_cast<std::uint32_t>(i % cfg_.slots[0]);
    Bucket& bk = buckets_[b];
    if (bk.spare >= 0) {
      spares_[bk.spare][j] = nv;
      return nv;
    }
    const std::uint32_t needed = levels_needed(nv);
    if (needed > cfg_.levels()) {
      migrate(b);
      spares_[bk.spare][j] = nv;
      return nv;
    }
    auto path = path_of(bk, j);
    while (path.size() < needed) {
      const std::uint32_t nl = static_cast<std::uint32_t>(path.size());  // new level, 0-based
      std::uint64_t& bm = bk.bitmap[nl - 1];
      const std::uint32_t occupied =
          static_cast<std::uint32_t>(std::popcount(bm));
      if (occupied == cfg_.slots[nl]) {
        migrate(b);
        spares_[bk.spare][j] = nv;
        return nv;
      }
      const std::uint32_t parent = path.back();
      const std::uint32_t ins =
          static_cast<std::uint32_t>(std::popcount(bm & low_mask(parent)));
      bm |= std::uint64_t{1} << parent;
      // Shift occupied slots >= ins up by one; the bit flags of those slots
      // (next-level bitmap) move with them.
      auto& lv = bk.level[nl];
      for (std::uint32_t q = occupied; q > ins; --q) lv[q] = lv[q - 1];
      lv[ins] = 0;
      if (nl < cfg_.levels() - 1)
        bk.bitmap[nl] = insert_zero_bit(bk.bitmap[nl], ins, cfg_.slots[nl]);
      path.push_back(ins);
    }
    for (std::size_t l = 0; l < path.size(); ++l)
      bk.level[l][path[l]] = (nv >> offsets_[l]) & low_mask(cfg_.widths[l]);
    return nv;
  }

  void migrate(std::uint64_t b) {
    if (spares_.size() == cfg_.spare_buckets)
      throw std::runtime_error("brick: spare buckets exhausted");
    Bucket& bk = buckets_[b];
    std::vector<std::uint64_t> full(cfg_.slots[0]);
    for (std::uint32_t j = 0; j < cfg_.slots[0]; ++j) full[j] = assemble(bk, j);
    spares_.push_back(std::move(full));
    bk.spare = static_cast<std::int64_t>(spares_.size()) - 1;
    ++migrations_;
  }

  BrickConfig cfg_;
  std::vector<std::uint32_t> offsets_;  // offsets_[l] = sum of widths below level l
  std::vector<Bucket> buckets_;
  std::vector<std::vector<std::uint64_t>> spares_;
  std::uint64_t migrations_ = 0;
};

}  // namespace hbrick
