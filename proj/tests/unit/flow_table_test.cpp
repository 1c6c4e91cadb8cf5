#include "nettisa/flow_table.hpp"

#include <gtest/gtest.h>

#include <random>

#include "nettisa/pipeline.hpp"

namespace nettisa {
namespace {

using namespace std::chrono_literals;

PacketRecord pkt(double t_s, std::uint32_t flow = 0, std::uint32_t payload = 100, bool reverse = false) {
  PacketRecord p;
  p.timestamp = from_seconds(t_s);
  p.src_ip = IpAddress::v4(0x0a000000u + flow);
  p.dst_ip = IpAddress::v4(0xc0a80001u);
  p.src_port = static_cast<std::uint16_t>(2000 + flow);
  p.dst_port = 443;
  p.protocol = 17;
  p.payload_len = payload;
  if (reverse) {
    std::swap(p.src_ip, p.dst_ip);
    std::swap(p.src_port, p.dst_port);
  }
  return p;
}

struct Exported {
  FlowKey key;
  FlowBase base;
  ExportReason reason;
  Micros at;
};

template <class Policy = ClassicPolicy>
struct Harness {
  explicit Harness(TableConfig cfg = {}) : table(cfg) {}

  void feed(const PacketRecord& p) { table.ingest(p, sink()); }
  void finish() { table.finish(sink()); }
  void expire(Micros now) { table.expire(now, sink()); }

  auto sink() {
    return [this](typename FlowTable<Policy>::Entry&& e, ExportReason r, Micros at) {
      out.push_back({e.key, e.base, r, at});
    };
  }

  FlowTable<Policy> table;
  std::vector<Exported> out;
};

TEST(FlowTable, ActiveTimeoutSplitsLongFlow) {
  Harness h;  // 300 s active, 65 s inactive
  for (int t = 0; t <= 600; t += 10) h.feed(pkt(t));
  h.finish();
  ASSERT_EQ(h.out.size(), 3u);
  EXPECT_EQ(h.out[0].base.t_first, from_seconds(0));
  EXPECT_EQ(h.out[0].base.t_last, from_seconds(290));
  EXPECT_EQ(h.out[0].base.packets(), 30u);
  EXPECT_EQ(h.out[0].reason, ExportReason::active_timeout);
  EXPECT_EQ(h.out[1].base.t_first, from_seconds(300));
  EXPECT_EQ(h.out[1].base.t_last, from_seconds(590));
  EXPECT_EQ(h.out[1].reason, ExportReason::active_timeout);
  EXPECT_EQ(h.out[2].base.t_first, from_seconds(600));
  EXPECT_EQ(h.out[2].base.t_last, from_seconds(600));
  EXPECT_EQ(h.out[2].base.packets(), 1u);
  EXPECT_EQ(h.out[2].reason, ExportReason::end_of_input);
  EXPECT_EQ(h.table.counters().active_splits, 2u);
}

TEST(FlowTable, InactiveTimeoutBoundaryIsInclusive) {
  {
    Harness h;
    h.feed(pkt(100));
    h.feed(pkt(164.9));
    h.finish();
    ASSERT_EQ(h.out.size(), 1u);
    EXPECT_EQ(h.out[0].base.packets(), 2u);
  }
  {
    Harness h;
    h.feed(pkt(100));
    h.feed(pkt(165.0));
    h.finish();
    ASSERT_EQ(h.out.size(), 2u);
    EXPECT_EQ(h.out[0].reason, ExportReason::inactive_timeout);
    EXPECT_EQ(h.out[0].base.packets(), 1u);
    EXPECT_EQ(h.out[1].base.t_first, from_seconds(165));
  }
}

TEST(FlowTable, ForcedFlushCutsAtCaptureClockIntervals) {
  TableConfig cfg;
  cfg.forced_flush_interval = 5s;
  Harness h(cfg);
  for (int i = 0; i < 120; ++i) h.feed(pkt(i * 0.5));
  h.finish();
  ASSERT_EQ(h.out.size(), 12u);
  for (std::size_t i = 0; i < 11; ++i) {
    EXPECT_EQ(h.out[i].reason, ExportReason::forced_flush);
    EXPECT_EQ(h.out[i].base.packets(), 10u);
    EXPECT_EQ(h.out[i].base.t_first, from_seconds(5.0 * static_cast<double>(i)));
  }
  EXPECT_EQ(h.out[11].reason, ExportReason::end_of_input);
  EXPECT_EQ(h.table.counters().forced_flushes, 11u);
}

TEST(FlowTable, ForcedFlushSkipsEmptyIntervals) {
  TableConfig cfg;
  cfg.forced_flush_interval = 5s;
  Harness h(cfg);
  h.feed(pkt(0));
  h.feed(pkt(22));  // jumps over several boundaries: one flush, then next boundary at 25
  h.feed(pkt(24));
  h.feed(pkt(25));
  h.finish();
  ASSERT_EQ(h.out.size(), 3u);
  EXPECT_EQ(h.out[1].base.packets(), 2u);
  EXPECT_EQ(h.table.counters().forced_flushes, 2u);
}

TEST(FlowTable, EvictsLeastRecentlyUsed) {
  TableConfig cfg;
  cfg.max_entries = 2;
  Harness h(cfg);
  h.feed(pkt(0.0, 1));
  h.feed(pkt(0.1, 2));
  h.feed(pkt(0.2, 1));  // flow 1 is now the most recent
  h.feed(pkt(0.3, 3));  // evicts flow 2
  ASSERT_EQ(h.out.size(), 1u);
  EXPECT_EQ(h.out[0].reason, ExportReason::eviction);
  EXPECT_EQ(h.out[0].key, FlowKey::from_packet(pkt(0, 2)));
  EXPECT_EQ(h.table.size(), 2u);
  EXPECT_EQ(h.table.counters().evictions, 1u);
}

TEST(FlowTable, IdleFlowsAreSweptWhileOthersContinue) {
  Harness h;
  h.feed(pkt(0, 1));
  for (int t = 0; t <= 70; t += 5) h.feed(pkt(t, 2));
  ASSERT_EQ(h.out.size(), 1u);
  EXPECT_EQ(h.out[0].key, FlowKey::from_packet(pkt(0, 1)));
  EXPECT_EQ(h.out[0].reason, ExportReason::inactive_timeout);
  EXPECT_EQ(h.out[0].at, from_seconds(65));
}

TEST(FlowTable, ExpireOrdersByLastActivity) {
  Harness h;
  h.feed(pkt(3, 7));
  h.feed(pkt(1, 8));
  h.feed(pkt(2, 9));
  h.expire(from_seconds(67.5));  // flows last seen at 1 and 2 are idle for >= 65 s
  ASSERT_EQ(h.out.size(), 2u);
  EXPECT_EQ(h.out[0].base.t_last, from_seconds(1));
  EXPECT_EQ(h.out[1].base.t_last, from_seconds(2));
  EXPECT_EQ(h.table.size(), 1u);
  EXPECT_EQ(h.table.clock(), from_seconds(67.5));
}

TEST(FlowTable, DirectionFollowsFirstPacket) {
  Harness h;
  h.feed(pkt(0, 4, 10, /*reverse=*/true));
  h.feed(pkt(1, 4, 20, false));
  h.feed(pkt(2, 4, 30, false));
  h.finish();
  ASSERT_EQ(h.out.size(), 1u);
  const auto& b = h.out[0].base;
  EXPECT_EQ(b.packets_fwd, 1u);
  EXPECT_EQ(b.bytes_fwd, 10u);
  EXPECT_EQ(b.packets_rev, 2u);
  EXPECT_EQ(b.bytes_rev, 50u);
  const auto [src, dst] = oriented(h.out[0].key, b);
  EXPECT_EQ(src.port, 443);
  EXPECT_EQ(dst.port, 2004);
}

TEST(FlowTable, ReorderedPacketWidensWindowWithoutMovingClockBack) {
  Harness h;
  h.feed(pkt(10));
  h.feed(pkt(12));
  h.feed(pkt(9));
  EXPECT_EQ(h.table.clock(), from_seconds(12));
  h.finish();
  ASSERT_EQ(h.out.size(), 1u);
  EXPECT_EQ(h.out[0].base.t_first, from_seconds(9));
  EXPECT_EQ(h.out[0].base.t_last, from_seconds(12));
  EXPECT_EQ(h.table.counters().reorders, 1u);
}

std::vector<PacketRecord> random_traffic(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> flow(0, 199), size(0, 1460);
  std::exponential_distribution<double> gap(2.0);
  std::bernoulli_distribution rev(0.3);
  std::vector<PacketRecord> v;
  double t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t += gap(rng);
    v.push_back(pkt(t, flow(rng), size(rng), rev(rng)));
  }
  return v;
}

TEST(FlowTable, ConservesPacketsAndBytes) {
  TableConfig cfg;
  cfg.active_timeout = 120s;
  cfg.inactive_timeout = 30s;
  cfg.max_entries = 64;
  Harness<NetTisaPolicy> h(cfg);
  const auto traffic = random_traffic(3, 50'000);
  std::uint64_t bytes = 0;
  for (const auto& p : traffic) {
    h.feed(p);
    bytes += p.payload_len;
  }
  h.finish();
  std::uint64_t out_pkts = 0, out_bytes = 0;
  for (const auto& e : h.out) {
    out_pkts += e.base.packets();
    out_bytes += e.base.bytes();
  }
  EXPECT_EQ(out_pkts, traffic.size());
  EXPECT_EQ(out_bytes, bytes);
  const auto& c = h.table.counters();
  EXPECT_EQ(c.flows_created, c.flows_exported);
  EXPECT_EQ(c.flows_exported, h.out.size());
  EXPECT_GT(c.evictions, 0u);
  EXPECT_GT(c.inactive_expired, 0u);
  EXPECT_EQ(c.state_bytes, 0u);
}

TEST(FlowTable, DeterministicAcrossRuns) {
  const auto traffic = random_traffic(99, 20'000);
  auto run = [&] {
    TableConfig cfg;
    cfg.inactive_timeout = 10s;
    Harness h(cfg);
    for (const auto& p : traffic) h.feed(p);
    h.finish();
    return h.out;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].key, b[i].key);
    EXPECT_EQ(a[i].base, b[i].base);
    EXPECT_EQ(a[i].reason, b[i].reason);
    EXPECT_EQ(a[i].at, b[i].at);
  }
}

TEST(FlowTable, FinishExportsInKeyOrder) {
  Harness h;
  for (std::uint32_t f : {5u, 1u, 9u, 3u}) h.feed(pkt(0, f));
  h.finish();
  ASSERT_EQ(h.out.size(), 4u);
  for (std::size_t i = 1; i < h.out.size(); ++i) EXPECT_LT(h.out[i - 1].key, h.out[i].key);
}

TEST(FlowTable, FootprintTracksLiveEntries) {
  Harness<NetTisaPolicy> h;
  for (std::uint32_t f = 0; f < 10; ++f) h.feed(pkt(0, f));
  const auto per_entry = sizeof(FlowTable<NetTisaPolicy>::Entry);
  EXPECT_EQ(h.table.counters().state_bytes, 10 * per_entry);
  for (int i = 0; i < 1000; ++i) h.feed(pkt(0.001 * i, 0));
  EXPECT_EQ(h.table.counters().state_bytes, 10 * per_entry);
  h.finish();
  EXPECT_EQ(h.table.counters().state_bytes, 0u);
  EXPECT_EQ(h.table.counters().state_bytes_peak, 10 * per_entry);
}

TEST(FlowTable, StoredSeriesFootprintGrowsWithPackets) {
  Harness<OraclePolicy> h;
  for (int i = 0; i < 1000; ++i) h.feed(pkt(0.001 * i));
  EXPECT_GE(h.table.counters().state_bytes, 1000 * 2 * sizeof(double));
  h.finish();
  EXPECT_EQ(h.table.counters().state_bytes, 0u);
}

}  // namespace
}  // namespace nettisa
