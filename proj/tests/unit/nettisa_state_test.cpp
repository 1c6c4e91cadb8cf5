#include "nettisa/nettisa_state.hpp"

#include <gtest/gtest.h>

#include <random>

#include "nettisa/oracle.hpp"

namespace nettisa {
namespace {

struct Sample {
  double payload;
  Micros t;
};

NetTisaRecord stream(const std::vector<Sample>& v) {
  NetTisaState s;
  for (const auto& p : v) s.update(p.payload, p.t);
  return s.finalize();
}

OracleResult oracle(const std::vector<Sample>& v) {
  StoredSeries s;
  for (const auto& p : v) s.push(p.payload, p.t);
  return oracle_features(s, FlowBase{});
}

::testing::AssertionResult close(const NetTisaRecord& a, const NetTisaRecord& b, double rel = 1e-9,
                                 double abs = 1e-12) {
  for (std::size_t i = 0; i < NetTisaRecord::kFieldCount; ++i) {
    const double x = a.*kNetTisaFields[i];
    const double y = b.*kNetTisaFields[i];
    const double tol = std::max(abs, rel * std::max(std::fabs(x), std::fabs(y)));
    if (!(std::fabs(x - y) <= tol))
      return ::testing::AssertionFailure() << kNetTisaFieldNames[i] << ": " << x << " vs " << y;
  }
  return ::testing::AssertionSuccess();
}

const std::vector<Sample> kWorked{{100, Micros{0}}, {200, Micros{1'000'000}}, {300, Micros{3'000'000}}};

TEST(NetTisaState, WorkedExample) {
  const auto r = stream(kWorked);
  EXPECT_DOUBLE_EQ(r.mean, 200.0);
  EXPECT_DOUBLE_EQ(r.min, 100.0);
  EXPECT_DOUBLE_EQ(r.max, 300.0);
  EXPECT_NEAR(r.stdev, 81.64965809277261, 1e-12);
  EXPECT_NEAR(r.rms, 216.02468994692867, 1e-12);
  EXPECT_DOUBLE_EQ(r.avg_dispersion, 50.0);
  EXPECT_DOUBLE_EQ(r.kurtosis, 0.796875);
  EXPECT_DOUBLE_EQ(r.mean_relative_times, 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.mean_time_differences, 1.5);
  EXPECT_DOUBLE_EQ(r.min_time_differences, 1.0);
  EXPECT_DOUBLE_EQ(r.max_time_differences, 2.0);
  EXPECT_DOUBLE_EQ(r.time_distribution, 0.5);
  EXPECT_DOUBLE_EQ(r.switching_ratio, 2.0);
}

TEST(NetTisaState, CountsLengthSwitches) {
  NetTisaState s;
  for (double x : {60.0, 60.0, 1500.0, 1500.0, 60.0}) s.update(x, Micros{0});
  EXPECT_EQ(s.switches, 2u);
  EXPECT_DOUBLE_EQ(s.finalize().switching_ratio, 1.0);
}

TEST(NetTisaState, GapStatisticsOfUnevenArrivals) {
  // Gaps 0.5, 0.5, 2.0 s.
  const auto r = stream({{10, Micros{0}}, {10, Micros{500'000}}, {10, Micros{1'000'000}}, {10, Micros{3'000'000}}});
  EXPECT_DOUBLE_EQ(r.min_time_differences, 0.5);
  EXPECT_DOUBLE_EQ(r.max_time_differences, 2.0);
  EXPECT_DOUBLE_EQ(r.mean_time_differences, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_relative_times, (0 + 0.5 + 1.0 + 3.0) / 4);
  // Running gap means 0.5, 0.5, 1.0 -> deviations 0, 0, 1 -> (1/3) / 0.75.
  EXPECT_DOUBLE_EQ(r.time_distribution, (1.0 / 3.0) / 0.75);
  EXPECT_DOUBLE_EQ(r.switching_ratio, 0.0);
}

TEST(NetTisaState, SinglePacketFlowIsZeroFilled) {
  const auto r = stream({{512, Micros{42}}});
  EXPECT_DOUBLE_EQ(r.mean, 512);
  EXPECT_DOUBLE_EQ(r.min, 512);
  EXPECT_DOUBLE_EQ(r.max, 512);
  EXPECT_DOUBLE_EQ(r.rms, 512);
  EXPECT_EQ(r.stdev, 0.0);
  EXPECT_EQ(r.avg_dispersion, 0.0);
  EXPECT_EQ(r.kurtosis, 0.0);
  EXPECT_EQ(r.mean_relative_times, 0.0);
  EXPECT_EQ(r.mean_time_differences, 0.0);
  EXPECT_EQ(r.min_time_differences, 0.0);
  EXPECT_EQ(r.max_time_differences, 0.0);
  EXPECT_EQ(r.time_distribution, 0.0);
  EXPECT_EQ(r.switching_ratio, 0.0);
}

TEST(NetTisaState, DegenerateDistributionsAreZeroNotNan) {
  // Constant payloads: no spread, kurtosis undefined.
  auto r = stream({{0, Micros{0}}, {0, Micros{1}}, {0, Micros{2}}});
  EXPECT_EQ(r.stdev, 0.0);
  EXPECT_EQ(r.kurtosis, 0.0);
  EXPECT_EQ(r.rms, 0.0);
  // Equal gaps: the gap range is zero.
  EXPECT_EQ(r.time_distribution, 0.0);
  // Two packets: only one gap, no distribution.
  r = stream({{1, Micros{0}}, {2, Micros{7}}});
  EXPECT_EQ(r.time_distribution, 0.0);
  EXPECT_DOUBLE_EQ(r.switching_ratio, 2.0);
  // All packets in the same microsecond.
  r = stream({{5, Micros{9}}, {6, Micros{9}}, {7, Micros{9}}});
  EXPECT_EQ(r.mean_time_differences, 0.0);
  EXPECT_EQ(r.time_distribution, 0.0);
  for (auto f : kNetTisaFields) EXPECT_TRUE(std::isfinite(r.*f));
}

TEST(NetTisaState, EmptyFlowCannotBeFinalized) {
  NetTisaState s;
  EXPECT_THROW(s.finalize(), std::logic_error);
}

TEST(NetTisaState, ReorderedPacketGetsZeroGap) {
  NetTisaState s;
  s.update(1, Micros{1'000'000});
  s.update(1, Micros{3'000'000});
  s.update(1, Micros{2'000'000});  // late
  s.update(1, Micros{4'000'000});
  EXPECT_EQ(s.t_prev, 4'000'000.0);
  const auto r = s.finalize();
  EXPECT_EQ(r.min_time_differences, 0.0);
  EXPECT_DOUBLE_EQ(r.max_time_differences, 2.0);
  EXPECT_DOUBLE_EQ(r.mean_time_differences, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_relative_times, (0 + 2 + 2 + 3) / 4.0);
}

TEST(NetTisaState, FitsInSmallFixedFootprint) {
  static_assert(sizeof(NetTisaState) <= 160);
  EXPECT_EQ(sizeof(NetTisaState), 15 * sizeof(double) + 2 * sizeof(std::uint64_t));
}

TEST(NetTisaState, QuantizeRoundsThroughFloat) {
  const auto q = quantize(stream(kWorked));
  EXPECT_EQ(q.stdev, static_cast<double>(static_cast<float>(81.64965809277261)));
  EXPECT_EQ(q.mean, 200.0);
}

std::vector<Sample> random_flow(std::mt19937_64& rng, std::size_t n, double reorder = 0.01) {
  std::uniform_int_distribution<int> size(0, 1460);
  std::uniform_int_distribution<std::int64_t> gap(0, 10'000'000);
  std::bernoulli_distribution late(reorder);
  std::vector<Sample> v;
  std::int64_t t = 1'700'000'000'000'000;
  for (std::size_t i = 0; i < n; ++i) {
    t += gap(rng);
    v.push_back({static_cast<double>(size(rng)), Micros{t}});
    if (i > 0 && late(rng)) std::swap(v[i].t, v[i - 1].t);
  }
  return v;
}

TEST(NetTisaProperty, StreamingMatchesStoredSeries) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len(1, 500);
  for (int flow = 0; flow < 500; ++flow) {
    const auto v = random_flow(rng, len(rng));
    ASSERT_TRUE(close(stream(v), oracle(v).approximated)) << "flow " << flow << " n=" << v.size();
  }
}

TEST(NetTisaProperty, ShiftingTimeChangesNothing) {
  std::mt19937_64 rng(5);
  for (int flow = 0; flow < 200; ++flow) {
    auto v = random_flow(rng, 2 + flow % 300);
    const auto base = stream(v);
    for (auto& p : v) p.t += Micros{123'456'789'000};
    ASSERT_TRUE(close(base, stream(v)));
  }
}

TEST(NetTisaProperty, ScalingTimeScalesTimeFeaturesOnly) {
  std::mt19937_64 rng(6);
  for (int flow = 0; flow < 200; ++flow) {
    auto v = random_flow(rng, 2 + flow % 300);
    const auto base = stream(v);
    for (auto& p : v) p.t = p.t * 4;
    auto scaled = stream(v);
    for (auto f : {&NetTisaRecord::mean_relative_times, &NetTisaRecord::mean_time_differences,
                   &NetTisaRecord::min_time_differences, &NetTisaRecord::max_time_differences})
      scaled.*f /= 4;
    ASSERT_TRUE(close(base, scaled));
  }
}

TEST(NetTisaProperty, ScalingPayloadsScalesLengthFeaturesOnly) {
  std::mt19937_64 rng(7);
  for (int flow = 0; flow < 200; ++flow) {
    auto v = random_flow(rng, 2 + flow % 300);
    const auto base = stream(v);
    for (auto& p : v) p.payload *= 3;
    auto scaled = stream(v);
    for (auto f : {&NetTisaRecord::mean, &NetTisaRecord::min, &NetTisaRecord::max, &NetTisaRecord::stdev,
                   &NetTisaRecord::rms, &NetTisaRecord::avg_dispersion})
      scaled.*f /= 3;
    ASSERT_TRUE(close(base, scaled));
  }
}

TEST(NetTisaProperty, ShiftingPayloadsMovesLocationOnly) {
  std::mt19937_64 rng(8);
  for (int flow = 0; flow < 200; ++flow) {
    auto v = random_flow(rng, 2 + flow % 300);
    const auto base = stream(v);
    for (auto& p : v) p.payload += 40;
    auto shifted = stream(v);
    EXPECT_NEAR(shifted.mean, base.mean + 40, 1e-9 * shifted.mean);
    EXPECT_NEAR(shifted.min, base.min + 40, 1e-12);
    EXPECT_NEAR(shifted.max, base.max + 40, 1e-12);
    for (auto f : {&NetTisaRecord::stdev, &NetTisaRecord::avg_dispersion, &NetTisaRecord::switching_ratio,
                   &NetTisaRecord::time_distribution})
      EXPECT_NEAR(shifted.*f, base.*f, std::max(1e-12, 1e-9 * base.*f));
    EXPECT_NEAR(shifted.kurtosis, base.kurtosis, 1e-8 * std::max(1.0, base.kurtosis));
  }
}

TEST(NetTisaProperty, FeatureRanges) {
  std::mt19937_64 rng(9);
  for (int flow = 0; flow < 300; ++flow) {
    const auto r = stream(random_flow(rng, 1 + flow));
    EXPECT_LE(r.min, r.mean);
    EXPECT_LE(r.mean, r.max);
    EXPECT_GE(r.rms, r.mean);
    EXPECT_LE(r.stdev, 0.5 * (r.max - r.min) + 1e-9);
    EXPECT_GE(r.switching_ratio, 0.0);
    EXPECT_LE(r.switching_ratio, 2.0);
    EXPECT_LE(r.min_time_differences, r.mean_time_differences + 1e-12);
    EXPECT_LE(r.mean_time_differences, r.max_time_differences + 1e-12);
    EXPECT_GE(r.time_distribution, 0.0);
  }
}

}  // namespace
}  // namespace nettisa
