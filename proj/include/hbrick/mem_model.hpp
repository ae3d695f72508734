#pragma once
// BRAM-equivalent memory accounting for flat, BRICK, and HBRICK layouts.
// A 36Kb dual-port block supports the standard aspect ratios 512x72 down
// to 32Kx1; arrays are covered by tiling columns of those aspects.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "brick.hpp"
#include "hbrick.hpp"

namespace hbrick {

struct BramAspect {
  std::uint64_t depth;
  std::uint32_t width;
};

inline const std::vector<BramAspect>& bram_aspects() {
  static const std::vector<BramAspect> aspects{
      {512, 72}, {1024, 36}, {2048, 18}, {4096, 9},
      {8192, 4}, {16384, 2}, {32768, 1}};
  return aspects;
}

// Minimal number of 36Kb blocks covering an entries x width array: choose
// column widths from the aspect set, tiling each column vertically.
inline std::uint64_t bram_count(std::uint32_t width_bits, std::uint64_t entries) {
  if (width_bits == 0 || entries == 0) return 0;
  std::vector<std::uint64_t> best(width_bits + 1,
                                  std::numeric_limits<std::uint64_t>::max());
  best[0] = 0;
  for (std::uint32_t w = 1; w <= width_bits; ++w) {
    for (const auto& a : bram_aspects()) {
      const std::uint32_t col = std::min(a.width, w);
      const std::uint64_t blocks = (entries + a.depth - 1) / a.depth;
      if (best[w - col] != std::numeric_limits<std::uint64_t>::max())
        best[w] = std::min(best[w], best[w - col] + blocks);
    }
  }
  return best[width_bits];
}

struct MemComponent {
  std::string name;
  std::uint64_t bits = 0;
  std::uint64_t brams = 0;
};

struct MemoryReport {
  std::string backend;
  std::vector<MemComponent> components;

  std::uint64_t total_bits() const {
    std::uint64_t s = 0;
    for (const auto& c : components) s += c.bits;
    return s;
  }
  std::uint64_t total_brams() const {
    std::uint64_t s = 0;
    for (const auto& c : components) s += c.brams;
    return s;
  }
  const MemComponent* find(const std::string& name) const {
    for (const auto& c : components)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline MemoryReport flat_memory_report(std::uint32_t d, std::uint32_t width,
                                       std::uint64_t entries) {
  MemoryReport r;
  r.backend = "flat" + std::to_string(width);
  r.components.push_back(
      {"counters", std::uint64_t{d} * width * entries,
       std::uint64_t{d} * bram_count(width, entries)});
  return r;
}

inline MemoryReport brick_memory_report(const BrickConfig& cfg, std::uint32_t d) {
  MemoryReport r;
  r.backend = "brick";
  const std::uint64_t n = cfg.buckets;
  std::uint64_t level_bits = 0, level_brams = 0;
  for (std::uint32_t l = 0; l < cfg.levels(); ++l) {
    level_bits += n * cfg.slots[l] * cfg.widths[l];
    level_brams += bram_count(cfg.widths[l], n * cfg.slots[l]);
  }
  r.components.push_back({"levels", d * level_bits, d * level_brams});
  std::uint64_t bm_bits = 0, bm_brams = 0;
  for (std::uint32_t l = 0; l + 1 < cfg.levels(); ++l) {
    bm_bits += n * cfg.slots[l];
    bm_brams += bram_count(cfg.slots[l], n);
  }
  r.components.push_back({"bitmaps", d * bm_bits, d * bm_brams});
  const std::uint64_t spare_bits =
      std::uint64_t{cfg.spare_buckets} * cfg.slots[0] * cfg.total_width();
  r.components.push_back(
      {"spares", d * spare_bits,
       d * bram_count(cfg.total_width(),
                      std::uint64_t{cfg.spare_buckets} * cfg.slots[0])});
  return r;
}

inline MemoryReport hbrick_memory_report(const HbrickConfig& cfg,
                                         std::uint32_t d) {
  MemoryReport r;
  r.backend = "hbrick";
  const std::uint64_t n = cfg.buckets;
  const std::uint32_t k = cfg.entries_per_bucket;
  if (cfg.opt_widths.empty()) {
    // no optional levels: plain fixed-width counters, nothing else needed
    r.components.push_back({"counters", d * n * k * std::uint64_t{cfg.base_width},
                            d * bram_count(cfg.base_width, n * k)});
    return r;
  }
  r.components.push_back({"base", d * n * k * std::uint64_t{cfg.base_width},
                          d * bram_count(cfg.base_width, n * k)});
  std::uint64_t packed_bits = 0, packed_brams = 0;
  for (std::size_t l = 0; l < cfg.opt_widths.size(); ++l) {
    const std::uint32_t word = cfg.opt_slots[l] * cfg.opt_widths[l];
    packed_bits += n * word;
    packed_brams += bram_count(word, n);
  }
  r.components.push_back({"packed_levels", d * packed_bits, d * packed_brams});
  // unified bitmap: one segment word chain per bucket
  std::uint32_t seg_bits = k;
  for (std::size_t l = 0; l + 1 < cfg.opt_slots.size(); ++l)
    seg_bits += cfg.opt_slots[l];
  r.components.push_back({"unified_bitmap", d * n * std::uint64_t{seg_bits},
                          d * bram_count(seg_bits, n)});
  r.components.push_back(
      {"dirty_bits", d * n * std::uint64_t{k}, d * bram_count(k, n)});
  const std::uint64_t presence_bits = std::uint64_t{1} << cfg.key_bits();
  r.components.push_back({"assoc_bitmap", d * presence_bits,
                          d * bram_count(1, presence_bits)});
  // values occupy one 72-bit BRAM word each
  r.components.push_back(
      {"assoc_values", d * std::uint64_t{cfg.assoc_capacity} * 72,
       d * bram_count(72, cfg.assoc_capacity)});
  return r;
}

// In-array counter storage: levels, bitmaps and per-entry flags, excluding
// the overflow structures (spares, associative store). This is the quantity
// that shrinks as levels are added.
inline std::uint64_t counter_storage_bits(const MemoryReport& r) {
  std::uint64_t s = 0;
  for (const char* name : {"base", "packed_levels", "unified_bitmap",
                           "dirty_bits", "counters", "levels", "bitmaps"})
    if (const auto* c = r.find(name)) s += c->bits;
  return s;
}

// Level-sweep profiles covering the 29-bit trace profile. Only the L=3 row
// is pinned by the default profile; the others trade base width against
// optional-level granularity.
inline HbrickConfig hbrick_level_profile(std::uint32_t levels,
                                         std::uint64_t entries) {
  HbrickConfig cfg;
  switch (levels) {
    case 2:
      cfg.base_width = 15;
      cfg.opt_widths = {14};
      cfg.opt_slots = {5};
      break;
    case 3:
      break;  // default profile: 14, {8, 7}, {8, 4}
    case 4:
      cfg.base_width = 10;
      cfg.opt_widths = {7, 6, 6};
      cfg.opt_slots = {10, 12, 12};
      break;
    case 5:
      cfg.base_width = 8;
      cfg.opt_widths = {6, 5, 5, 5};
      cfg.opt_slots = {12, 14, 14, 14};
      break;
    default:
      throw std::invalid_argument("level profile defined for L in {2,3,4,5}");
  }
  cfg.buckets = entries / cfg.entries_per_bucket;
  cfg.validate();
  return cfg;
}

}  // namespace hbrick
