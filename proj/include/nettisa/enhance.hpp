#pragma once

#include <array>
#include <cmath>
#include <string_view>

#include "nettisa/flow_key.hpp"
#include "nettisa/nettisa_state.hpp"

namespace nettisa {

enum class VarianceMode {
  standard,    // stdev^2
  sqrt_stdev,  // sqrt(stdev), kept for reproduction experiments
};

/// Features a collector derives from an exported record without extra telemetry.
struct CollectorFeatures {
  double max_minus_min = 0;
  double percent_deviation = 0;
  double variance = 0;
  double burstiness = 0;
  double coef_variation = 0;
  double directions = 0;
  double duration = 0;

  static constexpr std::size_t kFieldCount = 7;

  friend bool operator==(const CollectorFeatures&, const CollectorFeatures&) = default;
};

inline constexpr std::array<double CollectorFeatures::*, CollectorFeatures::kFieldCount> kCollectorFields{
    &CollectorFeatures::max_minus_min,  &CollectorFeatures::percent_deviation,
    &CollectorFeatures::variance,       &CollectorFeatures::burstiness,
    &CollectorFeatures::coef_variation, &CollectorFeatures::directions,
    &CollectorFeatures::duration,
};

inline constexpr std::array<std::string_view, CollectorFeatures::kFieldCount> kCollectorFieldNames{
    "max_minus_min", "percent_deviation", "variance", "burstiness",
    "coef_variation", "directions", "duration",
};

/// Classification input: 4 flow counters plus the 20 time-series features (13 exported, 7 derived).
struct EnhancedRecord {
  std::uint64_t packets = 0;
  std::uint64_t packets_rev = 0;
  std::uint64_t bytes = 0;
  std::uint64_t bytes_rev = 0;
  NetTisaRecord nettisa;
  CollectorFeatures collector;

  friend bool operator==(const EnhancedRecord&, const EnhancedRecord&) = default;
};

inline CollectorFeatures collector_features(const NetTisaRecord& r, const FlowBase& base,
                                            VarianceMode variance = VarianceMode::standard) {
  CollectorFeatures c;
  c.max_minus_min = r.max - r.min;
  if (r.mean != 0) {
    c.percent_deviation = r.avg_dispersion / r.mean;
    c.coef_variation = r.stdev / r.mean;
  }
  c.variance = variance == VarianceMode::standard ? r.stdev * r.stdev : std::sqrt(r.stdev);
  if (r.stdev + r.mean != 0) c.burstiness = (r.stdev - r.mean) / (r.stdev + r.mean);
  const auto total = base.packets();
  if (total != 0) c.directions = static_cast<double>(base.packets_fwd) / static_cast<double>(total);
  c.duration = base.duration_seconds();
  return c;
}

inline EnhancedRecord enhance(const NetTisaRecord& r, const FlowBase& base,
                              VarianceMode variance = VarianceMode::standard) {
  return EnhancedRecord{base.packets_fwd, base.packets_rev, base.bytes_fwd, base.bytes_rev, r,
                        collector_features(r, base, variance)};
}

}  // namespace nettisa
