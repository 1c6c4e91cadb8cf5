#include "nettisa/splt.hpp"

#include <gtest/gtest.h>

namespace nettisa {
namespace {

TEST(SpltState, RecordsLengthsDirectionsAndGaps) {
  SpltState s;
  s.update(0, Direction::forward, Micros{1'000});
  s.update(1400, Direction::reverse, Micros{1'250});
  s.update(52, Direction::forward, Micros{4'000});
  ASSERT_EQ(s.count(), 3u);
  const auto p = s.packets();
  EXPECT_EQ(p[0], (SpltPacket{0, Direction::forward, Micros{0}}));
  EXPECT_EQ(p[1], (SpltPacket{1400, Direction::reverse, Micros{250}}));
  EXPECT_EQ(p[2], (SpltPacket{52, Direction::forward, Micros{2'750}}));
}

TEST(SpltState, StopsAfterThirtyPackets) {
  SpltState s;
  for (int i = 0; i < 100; ++i) s.update(static_cast<std::uint32_t>(i), Direction::forward, Micros{i});
  EXPECT_EQ(s.count(), SpltState::kLength);
  EXPECT_EQ(s.packets().back().payload_len, 29u);
  EXPECT_EQ(s.heap_bytes(), SpltState::kLength * sizeof(SpltPacket));
}

TEST(SpltState, StorageGrowsWithPacketCount) {
  SpltState s;
  EXPECT_EQ(s.heap_bytes(), 0u);
  s.update(1, Direction::forward, Micros{0});
  const auto small = s.heap_bytes();
  EXPECT_GT(small, 0u);
  for (int i = 0; i < 20; ++i) s.update(1, Direction::forward, Micros{i});
  EXPECT_GT(s.heap_bytes(), small);
}

TEST(SpltState, LatePacketHasZeroGap) {
  SpltState s;
  s.update(1, Direction::forward, Micros{100});
  s.update(1, Direction::forward, Micros{50});
  s.update(1, Direction::forward, Micros{130});
  EXPECT_EQ(s.packets()[1].dt, Micros{0});
  EXPECT_EQ(s.packets()[2].dt, Micros{30});
}

TEST(SpltCoverage, ShareOfLongFlows) {
  const std::vector<std::uint64_t> counts{1, 30, 31, 500};
  const auto r = splt_coverage(counts);
  EXPECT_EQ(r.total.flows, 4u);
  EXPECT_EQ(r.total.longer, 2u);
  EXPECT_DOUBLE_EQ(r.share(), 0.5);
  EXPECT_TRUE(r.per_label.empty());
}

TEST(SpltCoverage, PerLabelBreakdown) {
  const std::vector<std::uint64_t> counts{100, 2, 40, 3};
  const std::vector<std::string> labels{"video", "dns", "video", "dns"};
  const auto r = splt_coverage(counts, labels);
  EXPECT_DOUBLE_EQ(r.per_label.at("video").share(), 1.0);
  EXPECT_DOUBLE_EQ(r.per_label.at("dns").share(), 0.0);
  EXPECT_DOUBLE_EQ(r.share(), 0.5);
}

TEST(SpltCoverage, RejectsBadInput) {
  EXPECT_THROW(splt_coverage({}), std::invalid_argument);
  const std::vector<std::uint64_t> counts{1, 2};
  const std::vector<std::string> labels{"x"};
  EXPECT_THROW(splt_coverage(counts, labels), std::invalid_argument);
}

}  // namespace
}  // namespace nettisa
