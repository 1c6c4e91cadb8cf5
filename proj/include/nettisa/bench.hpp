#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nettisa/pcap.hpp"
#include "nettisa/pipeline.hpp"
#include "nettisa/record_io.hpp"

namespace nettisa {

/// Resident set size of this process, from /proc/self/statm (0 if unavailable).
inline std::size_t current_rss_bytes() {
  std::ifstream statm("/proc/self/statm");
  std::size_t pages_total = 0, pages_resident = 0;
  if (!(statm >> pages_total >> pages_resident)) return 0;
  return pages_resident * static_cast<std::size_t>(::sysconf(_SC_PAGESIZE));
}

/// Samples RSS on a background thread and keeps the maximum.
class MemorySampler {
 public:
  explicit MemorySampler(std::chrono::milliseconds period = std::chrono::milliseconds{50})
      : baseline_(current_rss_bytes()), peak_(baseline_) {
    worker_ = std::jthread([this, period](std::stop_token stop) {
      while (!stop.stop_requested()) {
        sample();
        std::this_thread::sleep_for(period);
      }
    });
  }
  ~MemorySampler() { stop(); }

  void stop() {
    if (worker_.joinable()) {
      worker_.request_stop();
      worker_.join();
      sample();
    }
  }

  std::size_t baseline() const { return baseline_; }
  std::size_t peak() const { return peak_.load(); }
  std::size_t growth() const { return peak() > baseline_ ? peak() - baseline_ : 0; }
  std::size_t samples() const { return samples_.load(); }

 private:
  void sample() {
    const auto rss = current_rss_bytes();
    auto prev = peak_.load();
    while (rss > prev && !peak_.compare_exchange_weak(prev, rss)) {}
    ++samples_;
  }

  std::size_t baseline_;
  std::atomic<std::size_t> peak_;
  std::atomic<std::size_t> samples_{0};
  std::jthread worker_;
};

struct BenchOptions {
  std::vector<std::string> inputs;
  std::vector<Mode> modes{Mode::classic, Mode::splt, Mode::nettisa, Mode::oracle};
  unsigned repeats = 3;
  ExtractOptions extract;
};

struct BenchRun {
  double seconds = 0;
  std::uint64_t packets = 0;
  std::uint64_t flows = 0;
  std::uint64_t output_bytes = 0;
  std::size_t state_bytes_peak = 0;
  std::size_t rss_peak = 0;
  std::size_t rss_growth = 0;
};

struct ModeReport {
  Mode mode = Mode::classic;
  std::vector<BenchRun> runs;

  double median_seconds() const {
    std::vector<double> s;
    for (const auto& r : runs) s.push_back(r.seconds);
    std::sort(s.begin(), s.end());
    if (s.empty()) return 0;
    return s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
  }
  std::uint64_t packets() const { return runs.empty() ? 0 : runs.front().packets; }
  std::uint64_t flows() const { return runs.empty() ? 0 : runs.front().flows; }
  double packets_per_second() const {
    const double m = median_seconds();
    return m > 0 ? static_cast<double>(packets()) / m : 0;
  }
  std::size_t state_bytes_peak() const {
    std::size_t p = 0;
    for (const auto& r : runs) p = std::max(p, r.state_bytes_peak);
    return p;
  }
  std::size_t rss_peak() const {
    std::size_t p = 0;
    for (const auto& r : runs) p = std::max(p, r.rss_peak);
    return p;
  }
  std::size_t rss_growth() const {
    std::size_t p = 0;
    for (const auto& r : runs) p = std::max(p, r.rss_growth);
    return p;
  }
};

/// One timed pass over all inputs: read, meter, finalize and serialize records.
inline BenchRun bench_once(const std::vector<std::string>& inputs, const ExtractOptions& opt) {
  BenchRun run;
  MemorySampler sampler;
  const auto layout = binary_layout_for(opt.mode);
  const auto start = std::chrono::steady_clock::now();
  for (const auto& path : inputs) {
    CaptureReader reader(path);
    const auto summary = run_extract(reader, opt, [&](FlowRecord&& r) {
      run.output_bytes += encode_binary(r, layout).size();
    });
    run.packets += summary.table.packets;
    run.flows += summary.flows;
    run.state_bytes_peak = std::max(run.state_bytes_peak, summary.table.state_bytes_peak);
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  sampler.stop();
  run.rss_peak = sampler.peak();
  run.rss_growth = sampler.growth();
  return run;
}

/// Runs every mode `repeats` times, interleaving modes within each repetition.
inline std::vector<ModeReport> run_bench(const BenchOptions& options) {
  std::vector<ModeReport> reports;
  for (Mode m : options.modes) reports.push_back({m, {}});
  for (unsigned rep = 0; rep < options.repeats; ++rep) {
    for (auto& report : reports) {
      ExtractOptions opt = options.extract;
      opt.mode = report.mode;
      report.runs.push_back(bench_once(options.inputs, opt));
    }
  }
  return reports;
}

inline nlohmann::ordered_json bench_report_json(const std::vector<ModeReport>& reports) {
  nlohmann::ordered_json j;
  j["modes"] = nlohmann::ordered_json::array();
  double classic = 0;
  for (const auto& r : reports)
    if (r.mode == Mode::classic) classic = r.median_seconds();
  for (const auto& r : reports) {
    nlohmann::ordered_json m;
    m["mode"] = to_string(r.mode);
    m["repeats"] = r.runs.size();
    m["median_seconds"] = r.median_seconds();
    m["packets"] = r.packets();
    m["packets_per_second"] = r.packets_per_second();
    m["flows"] = r.flows();
    m["peak_rss_bytes"] = r.rss_peak();
    m["rss_growth_bytes"] = r.rss_growth();
    m["peak_flow_state_bytes"] = r.state_bytes_peak();
    m["output_bytes"] = r.runs.empty() ? 0 : r.runs.front().output_bytes;
    if (classic > 0) m["slowdown_vs_classic"] = r.median_seconds() / classic;
    nlohmann::ordered_json times = nlohmann::ordered_json::array();
    for (const auto& run : r.runs) times.push_back(run.seconds);
    m["run_seconds"] = times;
    j["modes"].push_back(m);
  }
  return j;
}

inline std::string bench_report_table(const std::vector<ModeReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-8s %12s %14s %8s %14s %16s %10s\n", "mode", "median [s]", "packets/s",
                "flows", "peak RSS [MiB]", "flow state [B]", "vs classic");
  out += line;
  double classic = 0;
  for (const auto& r : reports)
    if (r.mode == Mode::classic) classic = r.median_seconds();
  for (const auto& r : reports) {
    const double ratio = classic > 0 ? r.median_seconds() / classic : 0;
    std::snprintf(line, sizeof(line), "%-8s %12.4f %14.0f %8llu %14.1f %16zu %10.2f\n", to_string(r.mode),
                  r.median_seconds(), r.packets_per_second(), static_cast<unsigned long long>(r.flows()),
                  static_cast<double>(r.rss_peak()) / (1024.0 * 1024.0), r.state_bytes_peak(), ratio);
    out += line;
  }
  return out;
}

}  // namespace nettisa
