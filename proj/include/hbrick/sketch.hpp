#pragma once
// Count-min sketch engine over any CounterArray backend, with plain and
// conservative update strategies and heavy-hitter flagging.

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "brick.hpp"
#include "counter_array.hpp"
#include "flow_key.hpp"
#include "hbrick.hpp"

namespace hbrick {

enum class BackendKind { flat, brick, hbrick };
enum class UpdateStrategy { plain, conservative };

inline const char* to_string(BackendKind k) {
  switch (k) {
    case BackendKind::flat: return "flat";
    case BackendKind::brick: return "brick";
    case BackendKind::hbrick: return "hbrick";
  }
  return "?";
}

inline const char* to_string(UpdateStrategy s) {
  return s == UpdateStrategy::plain ? "plain" : "conservative";
}

struct SketchConfig {
  std::uint32_t d = 4;
  std::uint64_t w = std::uint64_t{1} << 15;
  BackendKind backend = BackendKind::flat;
  std::uint32_t flat_width = 64;
  UpdateStrategy strategy = UpdateStrategy::plain;
  std::uint64_t phi = 0;  // heavy-hitter threshold, bytes
  std::uint64_t seed = 1;
  // Backend knobs; bucket counts are derived from w.
  BrickConfig brick_template{.widths = {14, 8, 7}, .slots = {64, 8, 4}};
  HbrickConfig hbrick_template{};

  void validate() const {
    if (d == 0) throw std::invalid_argument("sketch: D must be >= 1");
    if (w == 0 || (w & (w - 1)) != 0)
      throw std::invalid_argument("sketch: W must be a power of two");
  }

  std::unique_ptr<CounterArray> make_backend() const {
    switch (backend) {
      case BackendKind::flat:
        return std::make_unique<FlatCounterArray>(w, flat_width);
      case BackendKind::brick: {
        BrickConfig c = brick_template;
        c.buckets = w / c.slots[0];
        return std::make_unique<BrickArray>(c);
      }
      case BackendKind::hbrick: {
        HbrickConfig c = hbrick_template;
        c.buckets = w / c.entries_per_bucket;
        return std::make_unique<HbrickArray>(c);
      }
    }
    throw std::invalid_argument("sketch: unknown backend");
  }
};

struct Estimate {
  std::uint64_t value = 0;
  bool saturated = false;
};

// epsilon = 2/W, delta = 2^-D.
inline std::pair<double, double> error_bound(std::uint32_t d, std::uint64_t w) {
  if (d == 0 || w == 0) throw std::invalid_argument("error_bound: D, W >= 1");
  return {2.0 / static_cast<double>(w), std::exp2(-static_cast<double>(d))};
}

class CountMinSketch {
 public:
  explicit CountMinSketch(SketchConfig cfg)
      : cfg_(std::move(cfg)),
        family_(cfg_.d, cfg_.w, cfg_.seed) {
    cfg_.validate();
    for (std::uint32_t d = 0; d < cfg_.d; ++d)
      arrays_.push_back(cfg_.make_backend());
  }

  const SketchConfig& config() const { return cfg_; }
  const HashFamily& family() const { return family_; }
  CounterArray& array(std::uint32_t d) { return *arrays_.at(d); }
  const CounterArray& array(std::uint32_t d) const { return *arrays_.at(d); }

  Estimate query(const FlowKey& key) const {
    Estimate est;
    est.value = std::numeric_limits<std::uint64_t>::max();
    for (std::uint32_t d = 0; d < cfg_.d; ++d)
      est.value = std::min(est.value, arrays_[d]->read(family_.index(d, key)));
    for (std::uint32_t d = 0; d < cfg_.d; ++d) {
      const std::uint64_t idx = family_.index(d, key);
      if (arrays_[d]->read(idx) == est.value && arrays_[d]->at_capacity(idx))
        est.saturated = true;
    }
    return est;
  }

  Estimate update_plain(const FlowKey& key, std::uint64_t size) {
    for (std::uint32_t d = 0; d < cfg_.d; ++d)
      arrays_[d]->add(family_.index(d, key), size);
    return query(key);
  }

  Estimate update_conservative(const FlowKey& key, std::uint64_t size) {
    std::uint64_t est = std::numeric_limits<std::uint64_t>::max();
    for (std::uint32_t d = 0; d < cfg_.d; ++d)
      est = std::min(est, arrays_[d]->read(family_.index(d, key)));
    for (std::uint32_t d = 0; d < cfg_.d; ++d)
      arrays_[d]->raise_to(family_.index(d, key), est + size);
    return query(key);
  }

  Estimate update(const FlowKey& key, std::uint64_t size) {
    return cfg_.strategy == UpdateStrategy::plain
               ? update_plain(key, size)
               : update_conservative(key, size);
  }

  // Applies the configured strategy and flags heavy hitters; the registry
  // records the packet ordinal of each key's first threshold crossing.
  std::pair<Estimate, bool> process_packet(const FlowKey& key,
                                           std::uint64_t size,
                                           std::uint64_t ordinal) {
    const Estimate est = update(key, size);
    const bool heavy = est.value > cfg_.phi;
    if (heavy) registry_.try_emplace(key, ordinal);
    return {est, heavy};
  }

  const std::unordered_map<FlowKey, std::uint64_t, FlowKeyHash>& registry()
      const {
    return registry_;
  }

 private:
  SketchConfig cfg_;
  HashFamily family_;
  std::vector<std::unique_ptr<CounterArray>> arrays_;
  std::unordered_map<FlowKey, std::uint64_t, FlowKeyHash> registry_;
};

}  // namespace hbrick
