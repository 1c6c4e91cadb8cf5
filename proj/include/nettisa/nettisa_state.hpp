#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>

#include "nettisa/packet.hpp"

namespace nettisa {

/// The thirteen exported time-series features of one flow.
/// Payload features are in bytes, time features in seconds.
struct NetTisaRecord {
  double mean = 0;
  double min = 0;
  double max = 0;
  double stdev = 0;
  double rms = 0;
  double avg_dispersion = 0;
  double kurtosis = 0;
  double mean_relative_times = 0;
  double mean_time_differences = 0;
  double min_time_differences = 0;
  double max_time_differences = 0;
  double time_distribution = 0;
  double switching_ratio = 0;

  static constexpr std::size_t kFieldCount = 13;

  friend bool operator==(const NetTisaRecord&, const NetTisaRecord&) = default;
};

/// Export (and binary/CSV column) order of the record fields.
inline constexpr std::array<double NetTisaRecord::*, NetTisaRecord::kFieldCount> kNetTisaFields{
    &NetTisaRecord::mean,
    &NetTisaRecord::min,
    &NetTisaRecord::max,
    &NetTisaRecord::stdev,
    &NetTisaRecord::rms,
    &NetTisaRecord::avg_dispersion,
    &NetTisaRecord::kurtosis,
    &NetTisaRecord::mean_relative_times,
    &NetTisaRecord::mean_time_differences,
    &NetTisaRecord::min_time_differences,
    &NetTisaRecord::max_time_differences,
    &NetTisaRecord::time_distribution,
    &NetTisaRecord::switching_ratio,
};

inline constexpr std::array<std::string_view, NetTisaRecord::kFieldCount> kNetTisaFieldNames{
    "mean",
    "min",
    "max",
    "stdev",
    "rms",
    "avg_dispersion",
    "kurtosis",
    "mean_relative_times",
    "mean_time_differences",
    "min_time_differences",
    "max_time_differences",
    "time_distribution",
    "switching_ratio",
};

/// Rounds every field through single precision, i.e. to the value a collector receives.
// Spelled out field by field: GCC 11 at -O3 mis-vectorizes the equivalent loop over
// kNetTisaFields once it is inlined, leaving the first field unrounded.
inline NetTisaRecord quantize(const NetTisaRecord& r) {
  auto f = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  return {f(r.mean),
          f(r.min),
          f(r.max),
          f(r.stdev),
          f(r.rms),
          f(r.avg_dispersion),
          f(r.kurtosis),
          f(r.mean_relative_times),
          f(r.mean_time_differences),
          f(r.min_time_differences),
          f(r.max_time_differences),
          f(r.time_distribution),
          f(r.switching_ratio)};
}

/// Constant-size per-flow accumulator set: fifteen doubles and two counters.
///
/// Payload deviations (avg_dispersion, kurtosis) and gap deviations
/// (time_distribution) are taken against the running mean
/// mu_i = mu_{i-1} + (x_i - mu_{i-1}) / i, evaluated after x_i is folded in.
///
/// Timestamps are kept as whole microsecond counts (exact in a double), so gap
/// arithmetic is exact and shifting every timestamp changes nothing. A packet
/// older than its predecessor gets a zero gap and does not move the clock back.
struct NetTisaState {
  double sum_x = 0;
  double sum_x2 = 0;
  double min_x = std::numeric_limits<double>::infinity();
  double max_x = 0;
  double mu_hat = 0;
  double sum_abs_dev = 0;
  double sum_dev4 = 0;
  double t_first = 0;    // microseconds
  double t_prev = 0;     // microseconds, never decreases
  double sum_rel_t = 0;  // microseconds
  double min_dt = std::numeric_limits<double>::infinity();
  double max_dt = 0;
  double mu_hat_dt = 0;
  double sum_abs_dev_dt = 0;
  double prev_len = 0;
  std::uint64_t n = 0;
  std::uint64_t switches = 0;

  void update(double payload_len, Micros timestamp) {
    const double x = payload_len;
    const double t = static_cast<double>(timestamp.count());

    ++n;
    const double count = static_cast<double>(n);
    sum_x += x;
    sum_x2 += x * x;
    if (x < min_x) min_x = x;
    if (x > max_x) max_x = x;

    mu_hat += (x - mu_hat) / count;
    const double dev = x - mu_hat;
    const double dev2 = dev * dev;
    sum_abs_dev += std::fabs(dev);
    sum_dev4 += dev2 * dev2;

    if (n == 1) {
      t_first = t;
      t_prev = t;
      prev_len = x;
      return;
    }

    double gap_us = t - t_prev;
    if (gap_us < 0) {
      gap_us = 0;
    } else {
      t_prev = t;
    }
    const double dt = gap_us / 1e6;
    if (dt < min_dt) min_dt = dt;
    if (dt > max_dt) max_dt = dt;
    mu_hat_dt += (dt - mu_hat_dt) / (count - 1);
    sum_abs_dev_dt += std::fabs(dt - mu_hat_dt);
    sum_rel_t += t_prev - t_first;

    if (x != prev_len) ++switches;
    prev_len = x;
  }

  /// Derives the exported features. Undefined or degenerate features are 0.
  NetTisaRecord finalize() const {
    if (n == 0) throw std::logic_error("NetTisaState::finalize on an empty flow");
    const double count = static_cast<double>(n);
    NetTisaRecord r;
    r.mean = sum_x / count;
    r.min = min_x;
    r.max = max_x;
    // Same as sum_x2/n - mean^2; exact for integral payloads while the products fit 53 bits.
    const double variance = std::max(0.0, (count * sum_x2 - sum_x * sum_x) / (count * count));
    r.stdev = std::sqrt(variance);
    r.rms = std::sqrt(sum_x2 / count);
    r.avg_dispersion = sum_abs_dev / count;
    r.kurtosis = r.stdev > 0 ? sum_dev4 / (count * variance * variance) : 0.0;
    r.mean_relative_times = sum_rel_t / count / 1e6;
    if (n >= 2) {
      const double gaps = count - 1;
      r.mean_time_differences = (t_prev - t_first) / 1e6 / gaps;
      r.min_time_differences = min_dt;
      r.max_time_differences = max_dt;
      if (n >= 3 && max_dt > min_dt)
        r.time_distribution = (sum_abs_dev_dt / gaps) / (0.5 * (max_dt - min_dt));
      r.switching_ratio = static_cast<double>(switches) / (0.5 * gaps);
    }
    return r;
  }
};

inline NetTisaState new_state() { return {}; }

}  // namespace nettisa
