#pragma once
// Deterministic cycle-level model of the sketch pipeline. One item issues
// per cycle; its counter reads see memory as of the issue cycle and its
// write commits (R + C + W_lat) cycles later with last-write-wins
// semantics. Reproduces the update-stage data hazards and the merging /
// hybrid-update countermeasures.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "flow_key.hpp"
#include "trace.hpp"

namespace hbrick {

enum class PipelineStrategy {
  plain_dfu,           // plain update, data forwarding unit resolves hazards
  conservative_naive,  // conservative update, hazards ignored
  conservative_merge,  // conservative update behind a merge window
  hybrid               // merge + conservative, plain fallback on true conflicts
};

inline const char* to_string(PipelineStrategy s) {
  switch (s) {
    case PipelineStrategy::plain_dfu: return "plain+dfu";
    case PipelineStrategy::conservative_naive: return "conservative-naive";
    case PipelineStrategy::conservative_merge: return "conservative+merge";
    case PipelineStrategy::hybrid: return "hybrid";
  }
  return "?";
}

enum class HazardClass { none, false_conflict, true_conflict };

struct PipelineConfig {
  std::uint32_t read_latency = 4;     // R
  std::uint32_t compute_latency = 6;  // C
  std::uint32_t write_latency = 4;    // W_lat
  std::uint32_t dfu_depth = 0;        // 0 -> R + C + W_lat
  std::uint32_t merge_depth = 0;      // L_merge
  std::uint32_t extra_latency = 0;    // HBRICK T_c added to read and write
  PipelineStrategy strategy = PipelineStrategy::plain_dfu;
  std::uint32_t d = 4;
  std::uint64_t w = std::uint64_t{1} << 10;
  std::uint64_t seed = 1;
  std::uint64_t phi = 0;

  std::uint32_t hazard_window() const {
    return read_latency + compute_latency + write_latency + 2 * extra_latency;
  }

  void validate() const {
    if (read_latency == 0 || compute_latency == 0 || write_latency == 0)
      throw std::invalid_argument("pipeline: latencies must be >= 1");
    if (d == 0 || w == 0 || (w & (w - 1)) != 0)
      throw std::invalid_argument("pipeline: bad sketch dimensions");
  }
};

struct PipelineMetrics {
  std::uint64_t items_processed = 0;
  std::uint64_t items_emitted = 0;  // after merging
  std::uint64_t cycles = 0;
  double throughput = 0;  // input items per cycle
  std::uint64_t false_conflicts = 0;
  std::uint64_t true_conflicts = 0;
  std::uint64_t merges = 0;
  std::uint64_t hybrid_fallbacks = 0;
  std::uint64_t underestimated_flows = 0;
  double heavy_fn_rate = 0;
  double avg_abs_error = 0;
};

// Merge buffer of depth L: an incoming item is absorbed by a buffered item
// with the same key; the emitted stream never carries two equal keys within
// any window of L items.
class MergeWindow {
 public:
  explicit MergeWindow(std::uint32_t depth) : depth_(depth) {}

  std::optional<PacketRecord> push(const PacketRecord& item) {
    if (depth_ == 0) return item;
    for (auto& buffered : buffer_) {
      if (buffered.key == item.key) {
        buffered.size += item.size;
        ++merges_;
        return std::nullopt;
      }
    }
    buffer_.push_back(item);
    if (buffer_.size() > depth_) {
      PacketRecord out = buffer_.front();
      buffer_.pop_front();
      return out;
    }
    return std::nullopt;
  }

  std::vector<PacketRecord> flush() {
    std::vector<PacketRecord> out(buffer_.begin(), buffer_.end());
    buffer_.clear();
    return out;
  }

  std::uint64_t merges() const { return merges_; }

 private:
  std::uint32_t depth_;
  std::deque<PacketRecord> buffer_;
  std::uint64_t merges_ = 0;
};

struct InFlightItem {
  std::uint64_t issue_cycle = 0;
  FlowKey key;
  std::vector<std::uint64_t> indices;
  bool additive = false;               // plain update via DFU
  std::uint64_t size = 0;              // additive payload
  std::vector<std::uint64_t> values;   // absolute write values otherwise
};

// Classifies an item against everything still in flight: an equal key is a
// false conflict; a distinct key sharing a counter index in any array is a
// true conflict (which wins when both are present).
template <typename InFlight>
inline HazardClass detect_hazard(const InFlight& in_flight, const FlowKey& key,
                                 const std::vector<std::uint64_t>& indices) {
  bool saw_false = false;
  bool saw_true = false;
  for (const auto& item : in_flight) {
    if (item.key == key) {
      saw_false = true;
      continue;
    }
    for (std::size_t d = 0; d < indices.size(); ++d)
      if (item.indices[d] == indices[d]) {
        saw_true = true;
        break;
      }
  }
  if (saw_true) return HazardClass::true_conflict;
  if (saw_false) return HazardClass::false_conflict;
  return HazardClass::none;
}

inline PipelineMetrics simulate(const Trace& trace, const PipelineConfig& cfg) {
  cfg.validate();
  if (trace.empty()) throw std::invalid_argument("pipeline: empty trace");

  const std::uint32_t window = cfg.hazard_window();
  const bool merging = cfg.strategy == PipelineStrategy::conservative_merge ||
                       cfg.strategy == PipelineStrategy::hybrid;
  // Hybrid needs the merge window to cover the whole hazard window so that
  // only true conflicts remain for the fallback path.
  std::uint32_t merge_depth = merging ? cfg.merge_depth : 0;
  if (cfg.strategy == PipelineStrategy::hybrid)
    merge_depth = std::max(merge_depth, window);

  Trace stream;
  stream.reserve(trace.size());
  std::uint64_t merges = 0;
  {
    MergeWindow mw(merge_depth);
    for (const auto& rec : trace)
      if (auto out = mw.push(rec)) stream.push_back(*out);
    for (const auto& rec : mw.flush()) stream.push_back(rec);
    merges = mw.merges();
  }

  HashFamily family(cfg.d, cfg.w, cfg.seed);
  std::vector<std::vector<std::uint64_t>> counters(
      cfg.d, std::vector<std::uint64_t>(cfg.w, 0));
  std::deque<InFlightItem> in_flight;
  PipelineMetrics m;
  m.items_processed = trace.size();
  m.items_emitted = stream.size();
  m.merges = merges;

  auto commit = [&](const InFlightItem& item) {
    for (std::uint32_t d = 0; d < cfg.d; ++d) {
      if (item.additive)
        counters[d][item.indices[d]] += item.size;
      else
        counters[d][item.indices[d]] = item.values[d];  // last write wins
    }
  };

  for (std::uint64_t t = 0; t < stream.size(); ++t) {
    while (!in_flight.empty() &&
           in_flight.front().issue_cycle + window <= t) {
      commit(in_flight.front());
      in_flight.pop_front();
    }
    const PacketRecord& rec = stream[t];
    InFlightItem item;
    item.issue_cycle = t;
    item.key = rec.key;
    item.size = rec.size;
    item.indices.resize(cfg.d);
    for (std::uint32_t d = 0; d < cfg.d; ++d)
      item.indices[d] = family.index(d, rec.key);

    const HazardClass hz = detect_hazard(in_flight, item.key, item.indices);
    if (hz == HazardClass::false_conflict) ++m.false_conflicts;
    if (hz == HazardClass::true_conflict) ++m.true_conflicts;

    switch (cfg.strategy) {
      case PipelineStrategy::plain_dfu:
        item.additive = true;
        break;
      case PipelineStrategy::conservative_naive:
      case PipelineStrategy::conservative_merge: {
        // reads return the committed state at issue; in-flight updates are
        // invisible, which is exactly the hazard
        std::uint64_t est = std::numeric_limits<std::uint64_t>::max();
        for (std::uint32_t d = 0; d < cfg.d; ++d)
          est = std::min(est, counters[d][item.indices[d]]);
        item.values.resize(cfg.d);
        for (std::uint32_t d = 0; d < cfg.d; ++d)
          item.values[d] =
              std::max(counters[d][item.indices[d]], est + rec.size);
        break;
      }
      case PipelineStrategy::hybrid: {
        if (hz == HazardClass::true_conflict) {
          item.additive = true;  // DFU-safe plain update
          ++m.hybrid_fallbacks;
        } else {
          std::uint64_t est = std::numeric_limits<std::uint64_t>::max();
          for (std::uint32_t d = 0; d < cfg.d; ++d)
            est = std::min(est, counters[d][item.indices[d]]);
          item.values.resize(cfg.d);
          for (std::uint32_t d = 0; d < cfg.d; ++d)
            item.values[d] =
                std::max(counters[d][item.indices[d]], est + rec.size);
        }
        break;
      }
    }
    in_flight.push_back(std::move(item));
  }
  while (!in_flight.empty()) {
    commit(in_flight.front());
    in_flight.pop_front();
  }
  m.cycles = m.items_emitted + window;
  m.throughput = static_cast<double>(m.items_processed) /
                 static_cast<double>(m.cycles);

  const ExactCounts oracle = exact_counts(trace);
  auto estimate = [&](const FlowKey& key) {
    std::uint64_t est = std::numeric_limits<std::uint64_t>::max();
    for (std::uint32_t d = 0; d < cfg.d; ++d)
      est = std::min(est, counters[d][family.index(d, key)]);
    return est;
  };
  std::uint64_t heavy = 0, heavy_fn = 0;
  double err_sum = 0;
  for (const auto& [key, truth] : oracle.totals) {
    const std::uint64_t est = estimate(key);
    if (est < truth) ++m.underestimated_flows;
    err_sum += est >= truth ? static_cast<double>(est - truth)
                            : static_cast<double>(truth - est);
    if (truth > cfg.phi) {
      ++heavy;
      if (est <= cfg.phi) ++heavy_fn;
    }
  }
  m.avg_abs_error = err_sum / static_cast<double>(oracle.totals.size());
  m.heavy_fn_rate =
      heavy == 0 ? 0.0
                 : static_cast<double>(heavy_fn) / static_cast<double>(heavy);
  return m;
}

}  // namespace hbrick
