#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>

namespace hbrick {

inline std::uint64_t low_mask(std::uint32_t bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

// Inclusive popcount of bitmap over positions [0, p].
inline std::uint32_t rank_inclusive(std::uint64_t bitmap, std::uint32_t p,
                                    std::uint32_t length) {
  if (p >= length) throw std::out_of_range("rank: position out of range");
  return static_cast<std::uint32_t>(std::popcount(bitmap & low_mask(p + 1)));
}

inline bool test_bit(std::uint64_t bitmap, std::uint32_t p) {
  return (bitmap >> p) & 1;
}

// Inserts a zero bit at position p, shifting bits >= p up by one.
// Bits at or above `length` are discarded.
inline std::uint64_t insert_zero_bit(std::uint64_t bitmap, std::uint32_t p,
                                     std::uint32_t length) {
  const std::uint64_t low = bitmap & low_mask(p);
  const std::uint64_t high = (bitmap & ~low_mask(p)) << 1;
  return (low | high) & low_mask(length);
}

// Removes the bit at position p, shifting bits > p down by one.
inline std::uint64_t remove_bit(std::uint64_t bitmap, std::uint32_t p) {
  const std::uint64_t low = bitmap & low_mask(p);
  const std::uint64_t high = (bitmap >> 1) & ~low_mask(p);
  return low | high;
}

// Bit length of v (0 -> 0).
inline std::uint32_t bit_length(std::uint64_t v) {
  return static_cast<std::uint32_t>(std::bit_width(v));
}

}  // namespace hbrick
