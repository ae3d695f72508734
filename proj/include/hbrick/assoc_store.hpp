#pragma once
// Rank-indexed exact-match store for overflowed counter entries.
// A presence bitmap over the key space (organized as 72-bit-word rows of
// a 36Kb block) locates each key's value slot by rank; values are kept
// densely packed in ascending key order.

#include <bit>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace hbrick {

class AssociativeStore {
 public:
  AssociativeStore(std::uint32_t key_bits, std::uint32_t capacity)
      : key_bits_(key_bits), capacity_(capacity) {
    if (key_bits == 0 || key_bits > 40)
      throw std::invalid_argument("assoc: key_bits must be 1..40");
    const std::uint64_t words = ((std::uint64_t{1} << key_bits) + 63) / 64;
    bitmap_.assign(words, 0);
    word_rank_.assign(words + 1, 0);
  }

  std::uint32_t key_bits() const { return key_bits_; }
  std::uint32_t capacity() const { return capacity_; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(values_.size()); }
  std::uint64_t bitmap_bits() const { return std::uint64_t{1} << key_bits_; }

  bool contains(std::uint64_t key) const {
    check_key(key);
    return (bitmap_[key >> 6] >> (key & 63)) & 1;
  }

  std::optional<std::uint64_t> lookup(std::uint64_t key) const {
    if (!contains(key)) return std::nullopt;
    return values_[rank_below(key)];
  }

  void insert(std::uint64_t key, std::uint64_t value) {
    if (contains(key)) throw std::invalid_argument("assoc: duplicate key");
    if (size() == capacity_) throw std::length_error("assoc: capacity exhausted");
    const std::uint64_t slot = rank_below(key);
    values_.insert(values_.begin() + static_cast<std::ptrdiff_t>(slot), value);
    bitmap_[key >> 6] |= std::uint64_t{1} << (key & 63);
    for (std::uint64_t w = (key >> 6) + 1; w < word_rank_.size(); ++w)
      ++word_rank_[w];
  }

  // Replaces the value of a present key. The counter path only grows
  // values, so shrinking updates are rejected when enforce_monotone is set.
  void update(std::uint64_t key, std::uint64_t value,
              bool enforce_monotone = true) {
    if (!contains(key)) throw std::invalid_argument("assoc: key absent");
    std::uint64_t& cell = values_[rank_below(key)];
    if (enforce_monotone && value < cell)
      throw std::invalid_argument("assoc: non-monotone update rejected");
    cell = value;
  }

 private:
  void check_key(std::uint64_t key) const {
    if (key >> key_bits_) throw std::out_of_range("assoc: key out of range");
  }

  // Number of present keys strictly below `key`.
  std::uint64_t rank_below(std::uint64_t key) const {
    const std::uint64_t w = key >> 6;
    const std::uint64_t mask =
        (key & 63) == 0 ? 0 : (~std::uint64_t{0} >> (64 - (key & 63)));
    return word_rank_[w] + std::popcount(bitmap_[w] & mask);
  }

  std::uint32_t key_bits_;
  std::uint32_t capacity_;
  std::vector<std::uint64_t> bitmap_;
  std::vector<std::uint64_t> word_rank_;  // cumulative popcount of words below
  std::vector<std::uint64_t> values_;     // ascending key order
};

}  // namespace hbrick
