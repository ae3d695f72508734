#include "doctest.h"
#include "hbrick/mem_model.hpp"

using namespace hbrick;

namespace {

// Independent tiling oracle: enumerate how many columns of each aspect to
// stack side by side (covered width may exceed the requested width) and
// take the cheapest combination. Written as plain nested loops so it shares
// nothing with the production solver.
std::uint64_t brute_force_brams(std::uint32_t width, std::uint64_t entries) {
  if (width == 0 || entries == 0) return 0;
  const auto& aspects = bram_aspects();
  std::vector<std::uint32_t> max_cols(aspects.size());
  std::vector<std::uint64_t> col_cost(aspects.size());
  for (std::size_t i = 0; i < aspects.size(); ++i) {
    max_cols[i] = (width + aspects[i].width - 1) / aspects[i].width;
    col_cost[i] = (entries + aspects[i].depth - 1) / aspects[i].depth;
  }
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint32_t> counts(aspects.size(), 0);
  // odometer-style enumeration over column counts
  for (;;) {
    std::uint64_t covered = 0, cost = 0;
    for (std::size_t i = 0; i < aspects.size(); ++i) {
      covered += std::uint64_t{counts[i]} * aspects[i].width;
      cost += counts[i] * col_cost[i];
    }
    if (covered >= width) best = std::min(best, cost);
    std::size_t pos = 0;
    while (pos < counts.size() && counts[pos] == max_cols[pos])
      counts[pos++] = 0;
    if (pos == counts.size()) break;
    ++counts[pos];
  }
  return best;
}

}  // namespace

TEST_CASE("bram: native aspect fits in one block") {
  CHECK(bram_count(72, 512) == 1);
  CHECK(bram_count(36, 1024) == 1);
  CHECK(bram_count(1, 32768) == 1);
  CHECK(bram_count(1, 1) == 1);
}

TEST_CASE("bram: 32 bits by 32K entries takes 29 blocks") {
  CHECK(bram_count(32, std::uint64_t{1} << 15) == 29);
}

TEST_CASE("bram: zero-sized arrays cost nothing") {
  CHECK(bram_count(0, 100) == 0);
  CHECK(bram_count(8, 0) == 0);
}

TEST_CASE("bram: solver matches the brute-force tiling oracle") {
  const std::uint64_t entry_grid[] = {1,    100,   512,   513,  2048,
                                      4096, 10000, 32768, 65536};
  for (std::uint32_t w : {1u, 2u, 3u, 7u, 9u, 14u, 18u, 29u, 32u, 36u, 64u, 72u})
    for (std::uint64_t e : entry_grid) {
      CAPTURE(w);
      CAPTURE(e);
      CHECK(bram_count(w, e) == brute_force_brams(w, e));
    }
}

TEST_CASE("bram: count covers the raw bits and is monotone") {
  std::uint64_t prev_w = 0;
  for (std::uint32_t w = 1; w <= 72; ++w) {
    const std::uint64_t c = bram_count(w, 4096);
    CHECK(c * 36864 >= std::uint64_t{w} * 4096);
    CHECK(c >= prev_w);
    prev_w = c;
  }
  std::uint64_t prev_e = 0;
  for (std::uint64_t e = 512; e <= (1 << 16); e *= 2) {
    const std::uint64_t c = bram_count(20, e);
    CHECK(c >= prev_e);
    prev_e = c;
  }
}

TEST_CASE("mem: flat report itemization") {
  const MemoryReport r = flat_memory_report(4, 32, std::uint64_t{1} << 15);
  CHECK(r.backend == "flat32");
  CHECK(r.total_bits() == std::uint64_t{4} * 32 * 32768);
  CHECK(r.total_brams() == 4 * 29);
  CHECK(r.total_brams() * 36864 >= r.total_bits());
}

TEST_CASE("mem: report totals are component sums") {
  BrickConfig bc;
  bc.widths = {14, 8, 7};
  bc.slots = {64, 8, 4};
  bc.buckets = 512;
  const MemoryReport rb = brick_memory_report(bc, 4);
  const MemoryReport rh =
      hbrick_memory_report(HbrickConfig::caida_profile(1 << 15), 4);
  for (const MemoryReport* r : {&rb, &rh}) {
    std::uint64_t bits = 0, brams = 0;
    for (const auto& c : r->components) {
      bits += c.bits;
      brams += c.brams;
    }
    CHECK(r->total_bits() == bits);
    CHECK(r->total_brams() == brams);
    CHECK(brams * 36864 >= bits);
  }
}

TEST_CASE("mem: default profiles reproduce the layout ordering at D=4, W=2^15") {
  const std::uint64_t w = std::uint64_t{1} << 15;
  BrickConfig bc;
  bc.widths = {14, 8, 7};
  bc.slots = {64, 8, 4};
  bc.buckets = w / 64;
  const MemoryReport flat = flat_memory_report(4, 32, w);
  const MemoryReport brick = brick_memory_report(bc, 4);
  const MemoryReport hb = hbrick_memory_report(HbrickConfig::caida_profile(w), 4);
  // in-array counter bits: brick < hbrick < flat-32
  CHECK(counter_storage_bits(brick) < counter_storage_bits(hb));
  CHECK(counter_storage_bits(hb) < counter_storage_bits(flat));
  // block count: flat-32 costs more than hbrick end to end
  CHECK(flat.total_brams() > hb.total_brams());
}

TEST_CASE("mem: overflow economy of the shared store vs per-bucket spares") {
  const std::uint64_t w = std::uint64_t{1} << 15;
  BrickConfig bc;
  bc.widths = {14, 8, 7};
  bc.slots = {64, 8, 4};
  bc.buckets = w / 64;
  bc.spare_buckets = 128;
  const HbrickConfig hc = HbrickConfig::caida_profile(w);
  const MemoryReport brick = brick_memory_report(bc, 4);
  const MemoryReport hb = hbrick_memory_report(hc, 4);
  const MemComponent* spares = brick.find("spares");
  const MemComponent* values = hb.find("assoc_values");
  REQUIRE(spares != nullptr);
  REQUIRE(values != nullptr);
  // spare buckets hold k entries apiece; the shared store holds single
  // entries, so entry storage shrinks by at least k/4
  CHECK(spares->bits >= values->bits * (hc.entries_per_bucket / 4));
}

TEST_CASE("mem: zero-level config degenerates to flat accounting") {
  HbrickConfig cfg;
  cfg.base_width = 32;
  cfg.opt_widths.clear();
  cfg.opt_slots.clear();
  cfg.buckets = 512;
  cfg.validate();
  const MemoryReport hb = hbrick_memory_report(cfg, 4);
  const MemoryReport flat = flat_memory_report(4, 32, cfg.entries());
  CHECK(hb.total_bits() == flat.total_bits());
  CHECK(hb.total_brams() == flat.total_brams());
  REQUIRE(hb.components.size() == 1);
  CHECK(hb.components[0].name == "counters");
}

TEST_CASE("mem: deeper level sweeps shrink counter storage") {
  const std::uint64_t entries = std::uint64_t{1} << 15;
  std::uint64_t prev = std::numeric_limits<std::uint64_t>::max();
  for (std::uint32_t levels : {2u, 3u, 4u, 5u}) {
    const HbrickConfig cfg = hbrick_level_profile(levels, entries);
    CHECK(cfg.levels() == levels);
    CHECK(cfg.total_width() == 29);
    const std::uint64_t bits =
        counter_storage_bits(hbrick_memory_report(cfg, 4));
    CAPTURE(levels);
    CHECK(bits < prev);
    prev = bits;
  }
  CHECK_THROWS_AS(hbrick_level_profile(6, entries), std::invalid_argument);
}
