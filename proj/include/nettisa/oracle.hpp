#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nettisa/enhance.hpp"
#include "nettisa/nettisa_state.hpp"

namespace nettisa {

/// The full per-flow series, kept in arrival order. Memory grows with the flow.
struct StoredSeries {
  std::vector<double> payloads;
  std::vector<Micros> timestamps;

  void push(double payload_len, Micros timestamp) {
    payloads.push_back(payload_len);
    timestamps.push_back(timestamp);
  }
  std::size_t size() const { return payloads.size(); }
  std::size_t heap_bytes() const {
    return payloads.capacity() * sizeof(double) + timestamps.capacity() * sizeof(Micros);
  }
};

struct VariantGap {
  double approximated = 0;
  double exact = 0;
  double gap() const { return std::fabs(exact - approximated); }
};

/// Running-mean variants next to their exact-mean counterparts.
struct ExactVariantReport {
  VariantGap avg_dispersion;
  VariantGap kurtosis;
  VariantGap time_distribution;
};

struct OracleResult {
  NetTisaRecord approximated;  // the definitions the exporter ships
  NetTisaRecord exact;         // exact-mean deviations instead of running-mean ones
  EnhancedRecord enhanced;
  ExactVariantReport report;
};

namespace detail {

// Arrival timestamps with reordered packets held at the latest time seen so far.
inline std::vector<double> monotone_micros(const std::vector<Micros>& ts) {
  std::vector<double> out;
  out.reserve(ts.size());
  double clock = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = static_cast<double>(ts[i].count());
    clock = (i == 0) ? t : std::max(clock, t);
    out.push_back(clock);
  }
  return out;
}

inline std::vector<double> running_means(const std::vector<double>& xs) {
  std::vector<double> mu(xs.size());
  double m = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    m = m + (xs[i] - m) / static_cast<double>(i + 1);
    mu[i] = m;
  }
  return mu;
}

}  // namespace detail

/// Recomputes every feature from the stored series by definition.
inline OracleResult oracle_features(const StoredSeries& s, const FlowBase& base,
                                    VarianceMode variance_mode = VarianceMode::standard) {
  const std::size_t n = s.size();
  if (n == 0) throw std::invalid_argument("oracle_features: empty series");
  if (s.timestamps.size() != n) throw std::invalid_argument("oracle_features: ragged series");
  const double count = static_cast<double>(n);
  const auto& x = s.payloads;

  double sum = 0, sum_sq = 0;
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
  }
  const double mu = sum / count;
  double centered2 = 0;
  for (double v : x) centered2 += (v - mu) * (v - mu);
  const double var = centered2 / count;
  const double sigma = std::sqrt(var);

  const auto mu_run = detail::running_means(x);
  double abs_run = 0, fourth_run = 0, abs_exact = 0, fourth_exact = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d_run = x[i] - mu_run[i];
    const double d_ex = x[i] - mu;
    abs_run += std::fabs(d_run);
    fourth_run += std::pow(d_run, 4);
    abs_exact += std::fabs(d_ex);
    fourth_exact += std::pow(d_ex, 4);
  }

  const auto t = detail::monotone_micros(s.timestamps);
  double rel = 0;
  for (double ti : t) rel += ti - t.front();

  std::vector<double> dt;
  dt.reserve(n ? n - 1 : 0);
  for (std::size_t i = 1; i < n; ++i) dt.push_back((t[i] - t[i - 1]) / 1e6);

  std::size_t switches = 0;
  for (std::size_t i = 1; i < n; ++i) switches += (x[i] != x[i - 1]);

  OracleResult out;
  NetTisaRecord& a = out.approximated;
  a.mean = mu;
  a.min = *std::min_element(x.begin(), x.end());
  a.max = *std::max_element(x.begin(), x.end());
  a.stdev = sigma;
  a.rms = std::sqrt(sum_sq / count);
  a.avg_dispersion = abs_run / count;
  a.kurtosis = sigma > 0 ? fourth_run / (count * var * var) : 0.0;
  a.mean_relative_times = rel / count / 1e6;

  double tdist_exact = 0;
  if (!dt.empty()) {
    const double gaps = static_cast<double>(dt.size());
    double dt_sum = 0;
    for (double d : dt) dt_sum += d;
    const double dt_mean = dt_sum / gaps;
    const auto [lo, hi] = std::minmax_element(dt.begin(), dt.end());
    a.mean_time_differences = dt_mean;
    a.min_time_differences = *lo;
    a.max_time_differences = *hi;
    const double half_range = 0.5 * (*hi - *lo);
    if (n >= 3 && half_range > 0) {
      const auto dt_run = detail::running_means(dt);
      double dev_run = 0, dev_exact = 0;
      for (std::size_t i = 0; i < dt.size(); ++i) {
        dev_run += std::fabs(dt[i] - dt_run[i]);
        dev_exact += std::fabs(dt[i] - dt_mean);
      }
      a.time_distribution = (dev_run / gaps) / half_range;
      tdist_exact = (dev_exact / gaps) / half_range;
    }
    a.switching_ratio = static_cast<double>(switches) / (0.5 * gaps);
  }

  out.exact = a;
  out.exact.avg_dispersion = abs_exact / count;
  out.exact.kurtosis = sigma > 0 ? fourth_exact / (count * var * var) : 0.0;
  out.exact.time_distribution = tdist_exact;

  out.report.avg_dispersion = {a.avg_dispersion, out.exact.avg_dispersion};
  out.report.kurtosis = {a.kurtosis, out.exact.kurtosis};
  out.report.time_distribution = {a.time_distribution, out.exact.time_distribution};

  out.enhanced = enhance(a, base, variance_mode);
  return out;
}

/// Stored-series analysis of the kind a full time-series feature set performs
/// (order statistics, autocorrelation, Lomb-Scargle periodogram). Nothing here
/// can be computed streamwise; it is the workload of the oracle benchmark mode.
struct SeriesAnalysis {
  static constexpr std::size_t kLags = 8;
  static constexpr std::size_t kFrequencies = 64;

  double median = 0;
  double iqr = 0;
  std::array<double, kLags> autocorrelation{};
  double peak_frequency = 0;  // Hz
  double peak_power = 0;      // normalized periodogram power
};

inline SeriesAnalysis analyze_series(const StoredSeries& s) {
  SeriesAnalysis a;
  const std::size_t n = s.size();
  if (n == 0) return a;

  std::vector<double> sorted = s.payloads;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&sorted](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  a.median = quantile(0.5);
  a.iqr = quantile(0.75) - quantile(0.25);

  double mean = 0;
  for (double v : s.payloads) mean += v;
  mean /= static_cast<double>(n);
  double var = 0;
  for (double v : s.payloads) var += (v - mean) * (v - mean);
  if (var <= 0) return a;

  for (std::size_t lag = 1; lag <= SeriesAnalysis::kLags && lag < n; ++lag) {
    double acc = 0;
    for (std::size_t i = lag; i < n; ++i) acc += (s.payloads[i] - mean) * (s.payloads[i - lag] - mean);
    a.autocorrelation[lag - 1] = acc / var;
  }

  const double t0 = static_cast<double>(s.timestamps.front().count());
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = (static_cast<double>(s.timestamps[i].count()) - t0) / 1e6;
  const double span = *std::max_element(t.begin(), t.end()) - *std::min_element(t.begin(), t.end());
  if (n < 4 || span <= 0) return a;

  const double variance = var / static_cast<double>(n);
  const double f_lo = 1.0 / span;
  const double f_hi = std::max(f_lo * 2, 0.5 * static_cast<double>(n - 1) / span);
  const double ratio = std::pow(f_hi / f_lo, 1.0 / (SeriesAnalysis::kFrequencies - 1));
  double f = f_lo;
  for (std::size_t k = 0; k < SeriesAnalysis::kFrequencies; ++k, f *= ratio) {
    const double w = 2 * std::numbers::pi * f;
    double s2 = 0, c2 = 0;
    for (double ti : t) {
      s2 += std::sin(2 * w * ti);
      c2 += std::cos(2 * w * ti);
    }
    const double tau = std::atan2(s2, c2) / (2 * w);
    double yc = 0, ys = 0, cc = 0, ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = w * (t[i] - tau);
      const double c = std::cos(arg), sn = std::sin(arg);
      const double y = s.payloads[i] - mean;
      yc += y * c;
      ys += y * sn;
      cc += c * c;
      ss += sn * sn;
    }
    double power = 0;
    if (cc > 0) power += yc * yc / cc;
    if (ss > 0) power += ys * ys / ss;
    power /= 2 * variance;
    if (power > a.peak_power) {
      a.peak_power = power;
      a.peak_frequency = f;
    }
  }
  return a;
}

}  // namespace nettisa
