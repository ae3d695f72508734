#pragma once
// Counter-array interface shared by all backends, plus the flat
// fixed-width reference backend.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace hbrick {

// Insert-only counter array with W entries. Values are byte counts and
// never decrease.
class CounterArray {
 public:
  virtual ~CounterArray() = default;

  virtual std::uint64_t size() const = 0;

  // Current value of entry i.
  virtual std::uint64_t read(std::uint64_t i) const = 0;

  // entry i := min(old + delta, capacity); returns the new value.
  virtual std::uint64_t add(std::uint64_t i, std::uint64_t delta) = 0;

  // entry i := min(max(old, v), capacity); returns the new value.
  virtual std::uint64_t raise_to(std::uint64_t i, std::uint64_t v) = 0;

  // Largest representable per-entry value.
  virtual std::uint64_t capacity() const = 0;

  // True when entry i is clamped at capacity.
  virtual bool at_capacity(std::uint64_t i) const {
    return capacity() != std::numeric_limits<std::uint64_t>::max() &&
           read(i) == capacity();
  }

 protected:
  void check_index(std::uint64_t i) const {
    if (i >= size()) throw std::out_of_range("CounterArray: index >= W");
  }
};

// W cells of width_bits each, saturating at 2^w - 1.
class FlatCounterArray final : public CounterArray {
 public:
  FlatCounterArray(std::uint64_t entries, std::uint32_t width_bits)
      : width_bits_(width_bits), cells_(entries, 0) {
    if (width_bits == 0 || width_bits > 64)
      throw std::invalid_argument("FlatCounterArray: width must be 1..64");
  }

  std::uint64_t size() const override { return cells_.size(); }
  std::uint32_t width_bits() const { return width_bits_; }
  std::uint64_t saturation_events() const { return saturation_events_; }

  std::uint64_t capacity() const override {
    return width_bits_ == 64 ? std::numeric_limits<std::uint64_t>::max()
                             : (std::uint64_t{1} << width_bits_) - 1;
  }

  std::uint64_t read(std::uint64_t i) const override {
    check_index(i);
    return cells_[i];
  }

  std::uint64_t add(std::uint64_t i, std::uint64_t delta) override {
    check_index(i);
    const std::uint64_t cap = capacity();
    std::uint64_t& cell = cells_[i];
    if (delta > cap - cell) {
      cell = cap;
      ++saturation_events_;
    } else {
      cell += delta;
    }
    return cell;
  }

  std::uint64_t raise_to(std::uint64_t i, std::uint64_t v) override {
    check_index(i);
    const std::uint64_t cap = capacity();
    std::uint64_t& cell = cells_[i];
    if (v > cell) {
      if (v > cap) {
        cell = cap;
        ++saturation_events_;
      } else {
        cell = v;
      }
    }
    return cell;
  }

  const std::vector<std::uint64_t>& cells() const { return cells_; }

 private:
  std::uint32_t width_bits_;
  std::vector<std::uint64_t> cells_;
  std::uint64_t saturation_events_ = 0;
};

}  // namespace hbrick
