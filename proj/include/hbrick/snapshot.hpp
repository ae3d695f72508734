#pragma once
// Versioned binary sketch snapshots. Header: magic, version, D, W, backend
// kind, seeds; payload: per-array logical counter values. Loading rebuilds
// the backend by raising each entry to its stored value, which reproduces
// an equivalent queryable state.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "sketch.hpp"

namespace hbrick {

namespace snapshot_detail {

constexpr char kMagic[4] = {'C', 'M', 'S', 'K'};
constexpr std::uint32_t kVersion = 1;

inline void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
  out.write(b, 8);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("snapshot: truncated");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("snapshot: truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline void write_widths(std::ostream& out,
                         const std::vector<std::uint32_t>& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  for (auto x : v) write_u32(out, x);
}

inline std::vector<std::uint32_t> read_widths(std::istream& in) {
  std::vector<std::uint32_t> v(read_u32(in));
  for (auto& x : v) x = read_u32(in);
  return v;
}

}  // namespace snapshot_detail

inline void save_snapshot(std::ostream& out, const CountMinSketch& sk) {
  using namespace snapshot_detail;
  const SketchConfig& cfg = sk.config();
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, cfg.d);
  write_u64(out, cfg.w);
  write_u32(out, static_cast<std::uint32_t>(cfg.backend));
  write_u32(out, cfg.flat_width);
  write_u32(out, static_cast<std::uint32_t>(cfg.strategy));
  write_u64(out, cfg.phi);
  write_u64(out, cfg.seed);
  switch (cfg.backend) {
    case BackendKind::flat:
      break;
    case BackendKind::brick:
      write_widths(out, cfg.brick_template.widths);
      write_widths(out, cfg.brick_template.slots);
      write_u32(out, cfg.brick_template.spare_buckets);
      break;
    case BackendKind::hbrick:
      write_u32(out, cfg.hbrick_template.base_width);
      write_widths(out, cfg.hbrick_template.opt_widths);
      write_widths(out, cfg.hbrick_template.opt_slots);
      write_u32(out, cfg.hbrick_template.entries_per_bucket);
      write_u32(out, cfg.hbrick_template.assoc_capacity);
      write_u32(out, cfg.hbrick_template.reclaim_on_evict ? 1 : 0);
      break;
  }
  for (std::uint32_t d = 0; d < cfg.d; ++d)
    for (std::uint64_t i = 0; i < cfg.w; ++i)
      write_u64(out, sk.array(d).read(i));
}

inline void save_snapshot(const std::string& path, const CountMinSketch& sk) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path);
  save_snapshot(out, sk);
}

inline CountMinSketch load_snapshot(std::istream& in) {
  using namespace snapshot_detail;
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4))
    throw std::runtime_error("snapshot: bad magic");
  if (read_u32(in) != kVersion)
    throw std::runtime_error("snapshot: unsupported version");
  SketchConfig cfg;
  cfg.d = read_u32(in);
  cfg.w = read_u64(in);
  cfg.backend = static_cast<BackendKind>(read_u32(in));
  cfg.flat_width = read_u32(in);
  cfg.strategy = static_cast<UpdateStrategy>(read_u32(in));
  cfg.phi = read_u64(in);
  cfg.seed = read_u64(in);
  switch (cfg.backend) {
    case BackendKind::flat:
      break;
    case BackendKind::brick:
      cfg.brick_template.widths = read_widths(in);
      cfg.brick_template.slots = read_widths(in);
      cfg.brick_template.spare_buckets = read_u32(in);
      break;
    case BackendKind::hbrick:
      cfg.hbrick_template.base_width = read_u32(in);
      cfg.hbrick_template.opt_widths = read_widths(in);
      cfg.hbrick_template.opt_slots = read_widths(in);
      cfg.hbrick_template.entries_per_bucket = read_u32(in);
      cfg.hbrick_template.assoc_capacity = read_u32(in);
      cfg.hbrick_template.reclaim_on_evict = read_u32(in) != 0;
      break;
  }
  CountMinSketch sk(cfg);
  for (std::uint32_t d = 0; d < cfg.d; ++d)
    for (std::uint64_t i = 0; i < cfg.w; ++i) {
      const std::uint64_t v = read_u64(in);
      if (v) sk.array(d).raise_to(i, v);
    }
  return sk;
}

inline CountMinSketch load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path);
  return load_snapshot(in);
}

}  // namespace hbrick
