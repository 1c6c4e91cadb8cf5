#include "nettisa/enhance.hpp"

#include <gtest/gtest.h>

namespace nettisa {
namespace {

NetTisaRecord worked_record() {
  NetTisaState s;
  s.update(100, Micros{0});
  s.update(200, Micros{1'000'000});
  s.update(300, Micros{3'000'000});
  return s.finalize();
}

FlowBase worked_base() {
  FlowBase b;
  b.t_first = Micros{0};
  b.t_last = Micros{3'000'000};
  b.packets_fwd = 2;
  b.packets_rev = 1;
  b.bytes_fwd = 400;
  b.bytes_rev = 200;
  return b;
}

TEST(CollectorFeatures, WorkedValues) {
  const auto r = worked_record();
  const auto c = collector_features(r, worked_base());
  const double sigma = 81.64965809277261;
  EXPECT_DOUBLE_EQ(c.max_minus_min, 200.0);
  EXPECT_DOUBLE_EQ(c.percent_deviation, 0.25);
  EXPECT_NEAR(c.variance, 20000.0 / 3.0, 1e-9);
  EXPECT_NEAR(c.burstiness, (sigma - 200) / (sigma + 200), 1e-12);
  EXPECT_NEAR(c.coef_variation, sigma / 200, 1e-12);
  EXPECT_DOUBLE_EQ(c.directions, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.duration, 3.0);
}

TEST(CollectorFeatures, LiteralVarianceVariant) {
  const auto c = collector_features(worked_record(), worked_base(), VarianceMode::sqrt_stdev);
  EXPECT_NEAR(c.variance, std::sqrt(81.64965809277261), 1e-12);
}

TEST(CollectorFeatures, ZeroMeanAndEmptyCountsAreZeroFilled) {
  NetTisaRecord r;  // all-zero payloads
  FlowBase b;
  const auto c = collector_features(r, b);
  EXPECT_EQ(c.percent_deviation, 0.0);
  EXPECT_EQ(c.coef_variation, 0.0);
  EXPECT_EQ(c.burstiness, 0.0);
  EXPECT_EQ(c.directions, 0.0);
  EXPECT_EQ(c.duration, 0.0);
  for (auto f : kCollectorFields) EXPECT_TRUE(std::isfinite(c.*f));
}

TEST(CollectorFeatures, ConstantPayloadIsPerfectlyRegular) {
  NetTisaState s;
  for (int i = 0; i < 5; ++i) s.update(100, Micros{i * 1000});
  const auto c = collector_features(s.finalize(), FlowBase{});
  EXPECT_EQ(c.max_minus_min, 0.0);
  EXPECT_EQ(c.variance, 0.0);
  EXPECT_DOUBLE_EQ(c.burstiness, -1.0);
}

TEST(EnhancedRecord, CarriesCountersAndAllGroups) {
  const auto e = enhance(worked_record(), worked_base());
  EXPECT_EQ(e.packets, 2u);
  EXPECT_EQ(e.packets_rev, 1u);
  EXPECT_EQ(e.bytes, 400u);
  EXPECT_EQ(e.bytes_rev, 200u);
  EXPECT_EQ(e.nettisa, worked_record());
  EXPECT_EQ(e.collector, collector_features(worked_record(), worked_base()));
  EXPECT_EQ(4 + NetTisaRecord::kFieldCount + CollectorFeatures::kFieldCount, 24u);
}

}  // namespace
}  // namespace nettisa
