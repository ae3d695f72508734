#pragma once
// Five-tuple flow identity and the seeded hash family that maps keys
// to counter indices.

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbrick {

struct FlowKey {
  std::uint32_t src_ip = 0;
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t proto = 0;

  friend bool operator==(const FlowKey&, const FlowKey&) = default;

  // Canonical 13-byte encoding: fields in declaration order, big-endian.
  std::array<std::uint8_t, 13> encode() const {
    std::array<std::uint8_t, 13> out{};
    out[0] = static_cast<std::uint8_t>(src_ip >> 24);
    out[1] = static_cast<std::uint8_t>(src_ip >> 16);
    out[2] = static_cast<std::uint8_t>(src_ip >> 8);
    out[3] = static_cast<std::uint8_t>(src_ip);
    out[4] = static_cast<std::uint8_t>(dst_ip >> 24);
    out[5] = static_cast<std::uint8_t>(dst_ip >> 16);
    out[6] = static_cast<std::uint8_t>(dst_ip >> 8);
    out[7] = static_cast<std::uint8_t>(dst_ip);
    out[8] = static_cast<std::uint8_t>(src_port >> 8);
    out[9] = static_cast<std::uint8_t>(src_port);
    out[10] = static_cast<std::uint8_t>(dst_port >> 8);
    out[11] = static_cast<std::uint8_t>(dst_port);
    out[12] = proto;
    return out;
  }

  static FlowKey decode(const std::array<std::uint8_t, 13>& b) {
    FlowKey k;
    k.src_ip = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
               (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
    k.dst_ip = (std::uint32_t{b[4]} << 24) | (std::uint32_t{b[5]} << 16) |
               (std::uint32_t{b[6]} << 8) | std::uint32_t{b[7]};
    k.src_port = static_cast<std::uint16_t>((b[8] << 8) | b[9]);
    k.dst_port = static_cast<std::uint16_t>((b[10] << 8) | b[11]);
    k.proto = b[12];
    return k;
  }
};

inline std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline std::uint64_t hash_flow_key(const FlowKey& key, std::uint64_t seed) {
  const auto bytes = key.encode();
  std::uint64_t a = 0, b = 0;
  for (int i = 0; i < 8; ++i) a = (a << 8) | bytes[i];
  for (int i = 8; i < 13; ++i) b = (b << 8) | bytes[i];
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const {
    return static_cast<std::size_t>(hash_flow_key(k, 0));
  }
};

// D independent seeded hash functions onto [0, W). W must be a power of two;
// indices are taken by masking the 64-bit hash.
class HashFamily {
 public:
  HashFamily(std::uint32_t d_count, std::uint64_t table_size,
             std::vector<std::uint64_t> seeds)
      : d_count_(d_count), table_size_(table_size), seeds_(std::move(seeds)) {
    if (d_count_ == 0) throw std::invalid_argument("HashFamily: d_count == 0");
    if (table_size_ == 0 || (table_size_ & (table_size_ - 1)) != 0)
      throw std::invalid_argument("HashFamily: table_size must be a power of two");
    if (seeds_.size() != d_count_)
      throw std::invalid_argument("HashFamily: need one seed per hash");
  }

  // Derives per-row seeds from a single master seed.
  HashFamily(std::uint32_t d_count, std::uint64_t table_size,
             std::uint64_t master_seed)
      : HashFamily(d_count, table_size, derive_seeds(d_count, master_seed)) {}

  std::uint64_t index(std::uint32_t d, const FlowKey& key) const {
    if (d >= d_count_) throw std::out_of_range("HashFamily: d >= D");
    return hash_flow_key(key, seeds_[d]) & (table_size_ - 1);
  }

  std::uint32_t d_count() const { return d_count_; }
  std::uint64_t table_size() const { return table_size_; }
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }

  static std::vector<std::uint64_t> derive_seeds(std::uint32_t d_count,
                                                 std::uint64_t master_seed) {
    std::vector<std::uint64_t> s(d_count);
    for (std::uint32_t i = 0; i < d_count; ++i)
      s[i] = mix64(master_seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    return s;
  }

 private:
  std::uint32_t d_count_;
  std::uint64_t table_size_;
  std::vector<std::uint64_t> seeds_;
};

}  // namespace hbrick
