#pragma once
// Trace ingestion, synthetic trace generation (Zipf and a CAIDA-like
// bit-width profile), the exact-count oracle, and accuracy metrics.
//
// Wire format (CSV, UTF-8, LF): src_ip,dst_ip,src_port,dst_port,proto,bytes
// with dotted-quad IPs and decimal integers; '#' starts a comment line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bits.hpp"
#include "flow_key.hpp"

namespace hbrick {

struct PacketRecord {
  FlowKey key;
  std::uint64_t size = 0;
  std::uint64_t ordinal = 0;
};

using Trace = std::vector<PacketRecord>;

struct ZipfSpec {
  std::uint64_t n_packets = 100000;
  std::uint64_t n_flows = 10000;
  double skew = 1.0;  // s; 0 = uniform popularity
  std::uint32_t size_min = 64;
  std::uint32_t size_max = 1500;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_flows == 0) throw std::invalid_argument("zipf: n_flows >= 1");
    if (skew < 0) throw std::invalid_argument("zipf: skew >= 0");
    if (size_min > size_max) throw std::invalid_argument("zipf: size range");
  }
};

struct CaidaProfileSpec {
  std::uint64_t n_packets = 100000;
  std::uint64_t seed = 1;
};

struct ExactCounts {
  std::unordered_map<FlowKey, std::uint64_t, FlowKeyHash> totals;
  std::uint64_t total_bytes = 0;

  std::uint64_t flow_count() const { return totals.size(); }
};

// --- IPv4 text helpers ---------------------------------------------------

inline std::string format_ipv4(std::uint32_t ip) {
  std::ostringstream os;
  os << (ip >> 24) << '.' << ((ip >> 16) & 255) << '.' << ((ip >> 8) & 255)
     << '.' << (ip & 255);
  return os.str();
}

inline std::uint32_t parse_ipv4(const std::string& s) {
  std::uint32_t parts[4];
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    std::size_t next = i < 3 ? s.find('.', pos) : s.size();
    if (next == std::string::npos) throw std::invalid_argument("bad IPv4: " + s);
    const std::string tok = s.substr(pos, next - pos);
    if (tok.empty() || tok.size() > 3)
      throw std::invalid_argument("bad IPv4: " + s);
    const unsigned long v = std::stoul(tok);
    if (v > 255) throw std::invalid_argument("bad IPv4: " + s);
    parts[i] = static_cast<std::uint32_t>(v);
    pos = next + 1;
  }
  return (parts[0] << 24) | (parts[1] << 16) | (parts[2] << 8) | parts[3];
}

// --- CSV wire format -----------------------------------------------------

inline void load_csv_stream(std::istream& in,
                            const std::function<void(const PacketRecord&)>& sink) {
  std::string line;
  std::uint64_t line_no = 0;
  std::uint64_t ordinal = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = line.find(',', pos);
      fields.push_back(line.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (fields.size() != 6)
      throw std::runtime_error("trace parse error at line " +
                               std::to_string(line_no) + ": expected 6 fields");
    try {
      PacketRecord rec;
      rec.key.src_ip = parse_ipv4(fields[0]);
      rec.key.dst_ip = parse_ipv4(fields[1]);
      rec.key.src_port = static_cast<std::uint16_t>(std::stoul(fields[2]));
      rec.key.dst_port = static_cast<std::uint16_t>(std::stoul(fields[3]));
      rec.key.proto = static_cast<std::uint8_t>(std::stoul(fields[4]));
      rec.size = std::stoull(fields[5]);
      rec.ordinal = ordinal++;
      sink(rec);
    } catch (const std::exception& e) {
      throw std::runtime_error("trace parse error at line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline Trace load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  Trace t;
  load_csv_stream(in, [&](const PacketRecord& r) { t.push_back(r); });
  return t;
}

inline void write_csv(std::ostream& out, const Trace& trace) {
  for (const auto& rec : trace) {
    out << format_ipv4(rec.key.src_ip) << ',' << format_ipv4(rec.key.dst_ip)
        << ',' << rec.key.src_port << ',' << rec.key.dst_port << ','
        << static_cast<unsigned>(rec.key.proto) << ',' << rec.size << '\n';
  }
}

inline void write_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_csv(out, trace);
}

// --- Generators ----------------------------------------------------------

namespace detail {

// Uniform integer in [0, n) from raw engine output. Modulo reduction keeps
// the mapping identical across standard libraries.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;
}

inline double unit_real(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Synthesizes a distinct key per popularity rank; the rank is embedded in
// the address bits so distinctness is guaranteed.
inline FlowKey key_for_rank(std::uint64_t rank, std::uint64_t seed) {
  FlowKey k;
  const std::uint64_t h = mix64(seed ^ (rank * 0x9e3779b97f4a7c15ULL + 1));
  k.src_ip = 0x0a000000u | static_cast<std::uint32_t>(rank & 0xffffff);
  k.dst_ip = static_cast<std::uint32_t>(h >> 32);
  k.src_port = static_cast<std::uint16_t>(rank >> 24);
  k.dst_port = static_cast<std::uint16_t>(h >> 16);
  k.proto = (h & 1) ? 6 : 17;
  return k;
}

}  // namespace detail

// Flow popularity of rank r is proportional to r^-s; packets are drawn
// i.i.d. from that law with deterministic seeding.
inline Trace gen_zipf(const ZipfSpec& spec) {
  spec.validate();
  std::vector<double> cdf(spec.n_flows);
  double acc = 0;
  for (std::uint64_t r = 0; r < spec.n_flows; ++r) {
    acc += std::pow(static_cast<double>(r + 1), -spec.skew);
    cdf[r] = acc;
  }
  for (auto& c : cdf) c /= acc;

  std::mt19937_64 rng(spec.seed);
  Trace trace;
  trace.reserve(spec.n_packets);
  const std::uint64_t span = spec.size_max - spec.size_min + 1;
  for (std::uint64_t t = 0; t < spec.n_packets; ++t) {
    const double u = detail::unit_real(rng);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const std::uint64_t rank =
        static_cast<std::uint64_t>(it - cdf.begin());
    PacketRecord rec;
    rec.key = detail::key_for_rank(rank, spec.seed);
    rec.size = spec.size_min + detail::bounded(rng, span);
    rec.ordinal = t;
    trace.push_back(rec);
  }
  return trace;
}

// Synthetic stand-in for a CAIDA slice: flow totals drawn so the minimum
// bit-width histogram peaks at or below 14 bits with a thin tail capped at
// 29 bits, then split into MTU-sized packets and shuffled.
inline Trace gen_caida_profile(const CaidaProfileSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  // weight of target bit-width b: gaussian bump at 11 plus a thin tail
  std::vector<double> weights(30, 0.0);
  double total_w = 0;
  for (int b = 4; b <= 29; ++b) {
    double w = std::exp(-(b - 11.0) * (b - 11.0) / 18.0);
    if (b >= 15) w += 0.002;
    weights[b] = w;
    total_w += w;
  }
  Trace packets;
  std::uint64_t flow_id = 0;
  while (packets.size() < spec.n_packets) {
    double u = detail::unit_real(rng) * total_w;
    int bits = 29;
    for (int b = 4; b <= 29; ++b) {
      if (u < weights[b]) { bits = b; break; }
      u -= weights[b];
    }
    const std::uint64_t lo = bits == 1 ? 1 : (std::uint64_t{1} << (bits - 1));
    const std::uint64_t hi = (std::uint64_t{1} << bits) - 1;
    std::uint64_t size = lo + detail::bounded(rng, hi - lo + 1);
    // keep one flow from swallowing the packet budget
    const std::uint64_t remaining = spec.n_packets - packets.size();
    size = std::min<std::uint64_t>(size, remaining * 1500);
    const FlowKey key = detail::key_for_rank(flow_id++, spec.seed ^ 0xca1da);
    while (size > 0) {
      PacketRecord rec;
      rec.key = key;
      rec.size = std::min<std::uint64_t>(size, 1500);
      size -= rec.size;
      packets.push_back(rec);
    }
  }
  // seeded Fisher-Yates shuffle
  for (std::size_t i = packets.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(detail::bounded(rng, i));
    std::swap(packets[i - 1], packets[j]);
  }
  packets.resize(spec.n_packets);
  for (std::size_t t = 0; t < packets.size(); ++t) packets[t].ordinal = t;
  return packets;
}

// --- Oracle and metrics --------------------------------------------------

inline ExactCounts exact_counts(const Trace& trace) {
  ExactCounts ec;
  for (const auto& rec : trace) {
    ec.totals[rec.key] += rec.size;
    ec.total_bytes += rec.size;
  }
  return ec;
}

// Mean over distinct flows of |estimate - true|.
inline double avg_abs_error(
    const ExactCounts& oracle,
    const std::function<std::uint64_t(const FlowKey&)>& estimate) {
  if (oracle.totals.empty()) return 0.0;
  double sum = 0;
  for (const auto& [key, truth] : oracle.totals) {
    const std::uint64_t est = estimate(key);
    sum += est >= truth ? static_cast<double>(est - truth)
                        : static_cast<double>(truth - est);
  }
  return sum / static_cast<double>(oracle.totals.size());
}

// Buckets each flow by the bit length of its total size.
inline std::map<std::uint32_t, std::uint64_t> min_bitwidth_histogram(
    const ExactCounts& oracle) {
  std::map<std::uint32_t, std::uint64_t> hist;
  for (const auto& [key, truth] : oracle.totals)
    ++hist[std::max(1u, bit_length(truth))];
  return hist;
}

}  // namespace hbrick
