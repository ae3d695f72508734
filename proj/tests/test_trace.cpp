#include <set>
#include <sstream>

#include "doctest.h"
#include "hbrick/trace.hpp"

using namespace hbrick;

TEST_CASE("ipv4: format and parse round-trip") {
  CHECK(format_ipv4(0x0a000001) == "10.0.0.1");
  CHECK(parse_ipv4("10.0.0.1") == 0x0a000001);
  CHECK(parse_ipv4("255.255.255.255") == 0xffffffff);
  CHECK(parse_ipv4("0.0.0.0") == 0);
  CHECK_THROWS_AS(parse_ipv4("256.0.0.1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ipv4("1.2.3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ipv4("1.2.3.x"), std::exception);
}

TEST_CASE("csv: empty stream yields empty trace") {
  std::istringstream in("");
  Trace t;
  load_csv_stream(in, [&](const PacketRecord& r) { t.push_back(r); });
  CHECK(t.empty());
}

TEST_CASE("csv: comments and blank lines are skipped") {
  std::istringstream in(
      "# header\n"
      "\n"
      "10.0.0.1,10.0.0.2,80,443,6,1500\n"
      "# trailing comment\n");
  Trace t;
  load_csv_stream(in, [&](const PacketRecord& r) { t.push_back(r); });
  REQUIRE(t.size() == 1);
  CHECK(t[0].key.src_ip == 0x0a000001);
  CHECK(t[0].key.dst_ip == 0x0a000002);
  CHECK(t[0].key.src_port == 80);
  CHECK(t[0].key.dst_port == 443);
  CHECK(t[0].key.proto == 6);
  CHECK(t[0].size == 1500);
  CHECK(t[0].ordinal == 0);
}

TEST_CASE("csv: malformed line reports its line number") {
  std::istringstream in(
      "# one\n"
      "10.0.0.1,10.0.0.2,80,443,6,100\n"
      "10.0.0.1,10.0.0.2,80,443,6\n");
  Trace t;
  try {
    load_csv_stream(in, [&](const PacketRecord& r) { t.push_back(r); });
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(t.size() == 1);  // records before the error were delivered
}

TEST_CASE("csv: write then load round-trips keys, sizes and ordinals") {
  ZipfSpec spec;
  spec.n_packets = 500;
  spec.n_flows = 50;
  spec.seed = 7;
  const Trace orig = gen_zipf(spec);
  std::stringstream buf;
  write_csv(buf, orig);
  Trace back;
  load_csv_stream(buf, [&](const PacketRecord& r) { back.push_back(r); });
  REQUIRE(back.size() == orig.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    CHECK(back[i].key == orig[i].key);
    CHECK(back[i].size == orig[i].size);
    CHECK(back[i].ordinal == i);
  }
}

TEST_CASE("zipf: same seed reproduces the trace exactly") {
  ZipfSpec spec;
  spec.n_packets = 2000;
  spec.n_flows = 300;
  spec.seed = 99;
  const Trace a = gen_zipf(spec), b = gen_zipf(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].key == b[i].key);
    CHECK(a[i].size == b[i].size);
  }
  spec.seed = 100;
  const Trace c = gen_zipf(spec);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].key == c[i].key) || a[i].size != c[i].size) differs = true;
  CHECK(differs);
}

TEST_CASE("zipf: spec validation and size bounds") {
  ZipfSpec spec;
  spec.n_flows = 0;
  CHECK_THROWS_AS(gen_zipf(spec), std::invalid_argument);
  spec = ZipfSpec{};
  spec.skew = -0.5;
  CHECK_THROWS_AS(gen_zipf(spec), std::invalid_argument);
  spec = ZipfSpec{};
  spec.n_packets = 3000;
  spec.size_min = 100;
  spec.size_max = 120;
  for (const auto& rec : gen_zipf(spec)) {
    CHECK(rec.size >= 100);
    CHECK(rec.size <= 120);
  }
}

TEST_CASE("zipf: s=0 is uniform over flows") {
  ZipfSpec spec;
  spec.n_packets = 100000;
  spec.n_flows = 10;
  spec.skew = 0.0;
  spec.seed = 21;
  const ExactCounts ec = exact_counts(gen_zipf(spec));
  CHECK(ec.flow_count() == 10);
  std::unordered_map<FlowKey, std::uint64_t, FlowKeyHash> packets;
  for (const auto& rec : gen_zipf(spec)) ++packets[rec.key];
  for (const auto& [key, n] : packets)
    CHECK(std::abs(static_cast<double>(n) - 10000.0) < 500.0);  // ~5 sigma
}

TEST_CASE("zipf: higher skew concentrates mass on the head flow") {
  auto head_share = [](double s) {
    ZipfSpec spec;
    spec.n_packets = 50000;
    spec.n_flows = 1000;
    spec.skew = s;
    spec.seed = 23;
    const Trace t = gen_zipf(spec);
    std::unordered_map<FlowKey, std::uint64_t, FlowKeyHash> packets;
    for (const auto& rec : t) ++packets[rec.key];
    std::uint64_t top = 0;
    for (const auto& [key, n] : packets) top = std::max(top, n);
    return static_cast<double>(top) / static_cast<double>(t.size());
  };
  const double s0 = head_share(0.0), s1 = head_share(1.0), s15 = head_share(1.5);
  CHECK(s0 < s1);
  CHECK(s1 < s15);
  // rank-1 popularity under s=1: 1/H_1000 ~ 13.4%
  CHECK(s1 > 0.10);
  CHECK(s1 < 0.17);
}

TEST_CASE("zipf: rank keys are distinct") {
  std::set<std::array<std::uint8_t, 13>> seen;
  for (std::uint64_t r = 0; r < 5000; ++r)
    seen.insert(detail::key_for_rank(r, 5).encode());
  CHECK(seen.size() == 5000);
}

TEST_CASE("exact counts: hand-built trace") {
  Trace t;
  const FlowKey a{1, 2, 3, 4, 6}, b{5, 6, 7, 8, 17};
  t.push_back({a, 100, 0});
  t.push_back({b, 50, 1});
  t.push_back({a, 25, 2});
  const ExactCounts ec = exact_counts(t);
  CHECK(ec.flow_count() == 2);
  CHECK(ec.totals.at(a) == 125);
  CHECK(ec.totals.at(b) == 50);
  CHECK(ec.total_bytes == 175);
}

TEST_CASE("exact counts: order invariant") {
  ZipfSpec spec;
  spec.n_packets = 3000;
  spec.n_flows = 200;
  spec.seed = 27;
  Trace t = gen_zipf(spec);
  const ExactCounts before = exact_counts(t);
  std::reverse(t.begin(), t.end());
  const ExactCounts after = exact_counts(t);
  CHECK(before.total_bytes == after.total_bytes);
  REQUIRE(before.totals.size() == after.totals.size());
  for (const auto& [k, v] : before.totals) CHECK(after.totals.at(k) == v);
}

TEST_CASE("avg_abs_error: two-flow hand case") {
  Trace t;
  const FlowKey a{1, 2, 3, 4, 6}, b{5, 6, 7, 8, 17};
  t.push_back({a, 100, 0});
  t.push_back({b, 60, 1});
  const ExactCounts ec = exact_counts(t);
  // estimator overshoots a by 20 and undershoots b by 10
  const double err = avg_abs_error(ec, [&](const FlowKey& k) {
    return k == a ? std::uint64_t{120} : std::uint64_t{50};
  });
  CHECK(err == doctest::Approx(15.0));
  CHECK(avg_abs_error(ExactCounts{}, [](const FlowKey&) {
          return std::uint64_t{0};
        }) == 0.0);
}

TEST_CASE("bitwidth histogram: hand cases") {
  Trace t;
  t.push_back({FlowKey{1, 0, 0, 0, 6}, 1, 0});
  CHECK(min_bitwidth_histogram(exact_counts(t)) ==
        std::map<std::uint32_t, std::uint64_t>{{1, 1}});
  t.clear();
  t.push_back({FlowKey{2, 0, 0, 0, 6}, std::uint64_t{1} << 28, 0});
  CHECK(min_bitwidth_histogram(exact_counts(t)) ==
        std::map<std::uint32_t, std::uint64_t>{{29, 1}});
}

TEST_CASE("caida profile: histogram mode at or below 14 bits, max 29") {
  CaidaProfileSpec spec;
  spec.n_packets = 100000;
  spec.seed = 31;
  const Trace t = gen_caida_profile(spec);
  CHECK(t.size() == spec.n_packets);
  for (const auto& rec : t) CHECK(rec.size <= 1500);
  const auto hist = min_bitwidth_histogram(exact_counts(t));
  std::uint32_t mode = 0, max_bits = 0;
  std::uint64_t mode_n = 0;
  for (const auto& [bits, n] : hist) {
    if (n > mode_n) { mode = bits; mode_n = n; }
    max_bits = std::max(max_bits, bits);
  }
  CHECK(mode <= 14);
  CHECK(max_bits <= 29);
  // determinism
  const Trace t2 = gen_caida_profile(spec);
  REQUIRE(t2.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t[i].key == t2[i].key);
    CHECK(t[i].size == t2[i].size);
  }
}
