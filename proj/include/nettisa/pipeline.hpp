#pragma once

#include <algorithm>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nettisa/enhance.hpp"
#include "nettisa/flow_table.hpp"
#include "nettisa/nettisa_state.hpp"
#include "nettisa/oracle.hpp"
#include "nettisa/splt.hpp"

namespace nettisa {

/// What each flow carries besides the classic counters.
enum class Mode { classic, nettisa, splt, oracle };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::classic: return "classic";
    case Mode::nettisa: return "nettisa";
    case Mode::splt: return "splt";
    case Mode::oracle: return "oracle";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "classic") return Mode::classic;
  if (s == "nettisa") return Mode::nettisa;
  if (s == "splt") return Mode::splt;
  if (s == "oracle") return Mode::oracle;
  return std::nullopt;
}

struct ClassicPolicy {
  struct State {};
  static constexpr bool kDynamicSize = false;
  static void update(State&, const PacketRecord&, Direction) {}
  static std::size_t heap_bytes(const State&) { return 0; }
};

struct NetTisaPolicy {
  using State = NetTisaState;
  static constexpr bool kDynamicSize = false;
  static void update(State& s, const PacketRecord& p, Direction) {
    s.update(static_cast<double>(p.payload_len), p.timestamp);
  }
  static std::size_t heap_bytes(const State&) { return 0; }
};

struct SpltPolicy {
  using State = SpltState;
  static constexpr bool kDynamicSize = true;
  static void update(State& s, const PacketRecord& p, Direction d) { s.update(p.payload_len, d, p.timestamp); }
  static std::size_t heap_bytes(const State& s) { return s.heap_bytes(); }
};

struct OraclePolicy {
  using State = StoredSeries;
  static constexpr bool kDynamicSize = true;
  static void update(State& s, const PacketRecord& p, Direction) {
    s.push(static_cast<double>(p.payload_len), p.timestamp);
  }
  static std::size_t heap_bytes(const State& s) { return s.heap_bytes(); }
};

/// One exported flow as handed to writers.
struct FlowRecord {
  FlowKey key;
  FlowBase base;
  Micros exported_at{0};
  ExportReason reason = ExportReason::end_of_input;
  std::optional<NetTisaRecord> nettisa;  // single-precision values, as exported
  std::optional<CollectorFeatures> collector;
  std::optional<SpltState> splt;
  std::optional<SeriesAnalysis> analysis;
  std::optional<std::string> label;
};

struct ExtractOptions {
  Mode mode = Mode::nettisa;
  TableConfig table;
  bool enhanced = false;
  VarianceMode variance = VarianceMode::standard;
};

struct ExtractSummary {
  TableCounters table;
  std::uint64_t flows = 0;
};

namespace detail {

template <class Policy>
FlowRecord make_record(typename FlowTable<Policy>::Entry&& e, ExportReason reason, Micros at,
                       const ExtractOptions& opt) {
  FlowRecord r;
  r.key = e.key;
  r.base = e.base;
  r.exported_at = at;
  r.reason = reason;
  if constexpr (std::is_same_v<Policy, NetTisaPolicy>) {
    r.nettisa = quantize(e.state.finalize());
  } else if constexpr (std::is_same_v<Policy, OraclePolicy>) {
    r.nettisa = quantize(oracle_features(e.state, e.base, opt.variance).approximated);
    r.analysis = analyze_series(e.state);
  } else if constexpr (std::is_same_v<Policy, SpltPolicy>) {
    r.splt = std::move(e.state);
  }
  if (opt.enhanced && r.nettisa) r.collector = collector_features(*r.nettisa, r.base, opt.variance);
  return r;
}

template <class Policy, class Source, class Sink>
ExtractSummary extract_with(Source& source, const ExtractOptions& opt, Sink& sink) {
  FlowTable<Policy> table(opt.table);
  ExtractSummary summary;
  auto on_export = [&](typename FlowTable<Policy>::Entry&& e, ExportReason reason, Micros at) {
    ++summary.flows;
    sink(make_record<Policy>(std::move(e), reason, at, opt));
  };
  while (auto p = source.next()) table.ingest(*p, on_export);
  table.finish(on_export);
  summary.table = table.counters();
  return summary;
}

}  // namespace detail

/// Streams packets from `source` (anything with `std::optional<PacketRecord> next()`)
/// through a flow table of the selected mode; every exported flow goes to `sink`.
template <class Source, class Sink>
ExtractSummary run_extract(Source& source, const ExtractOptions& opt, Sink&& sink) {
  switch (opt.mode) {
    case Mode::classic: return detail::extract_with<ClassicPolicy>(source, opt, sink);
    case Mode::nettisa: return detail::extract_with<NetTisaPolicy>(source, opt, sink);
    case Mode::splt: return detail::extract_with<SpltPolicy>(source, opt, sink);
    case Mode::oracle: return detail::extract_with<OraclePolicy>(source, opt, sink);
  }
  throw std::logic_error("unknown mode");
}

namespace detail {

class PacketQueue {
 public:
  void push(std::vector<PacketRecord>&& batch) {
    {
      std::lock_guard lock(mu_);
      batches_.push_back(std::move(batch));
    }
    cv_.notify_one();
  }
  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_one();
  }
  bool pop(std::vector<PacketRecord>& out) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return !batches_.empty() || closed_; });
    if (batches_.empty()) return false;
    out = std::move(batches_.front());
    batches_.erase(batches_.begin());
    return true;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::vector<PacketRecord>> batches_;
  bool closed_ = false;
};

class BatchSource {
 public:
  explicit BatchSource(PacketQueue& q) : q_(q) {}
  std::optional<PacketRecord> next() {
    while (pos_ >= batch_.size()) {
      if (!q_.pop(batch_)) return std::nullopt;
      pos_ = 0;
    }
    return batch_[pos_++];
  }

 private:
  PacketQueue& q_;
  std::vector<PacketRecord> batch_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Sharded variant: packets are partitioned by flow key over `shards` worker
/// tables. Exports are collected and emitted ordered by (export time, key, first
/// packet time). Forced flushing is not supported here; max_entries is per shard.
template <class Source, class Sink>
ExtractSummary run_extract_sharded(Source& source, const ExtractOptions& opt, unsigned shards, Sink&& sink) {
  if (shards <= 1) return run_extract(source, opt, sink);
  if (opt.table.forced_flush_interval)
    throw std::invalid_argument("forced flush requires a single shard");

  constexpr std::size_t kBatch = 4096;
  std::vector<detail::PacketQueue> queues(shards);
  std::vector<std::vector<FlowRecord>> outputs(shards);
  std::vector<ExtractSummary> summaries(shards);
  std::vector<std::exception_ptr> errors(shards);
  {
    std::vector<std::jthread> workers;
    for (unsigned i = 0; i < shards; ++i) {
      workers.emplace_back([&, i] {
        try {
          detail::BatchSource src(queues[i]);
          summaries[i] = run_extract(src, opt, [&](FlowRecord&& r) { outputs[i].push_back(std::move(r)); });
        } catch (...) {
          errors[i] = std::current_exception();
          std::vector<PacketRecord> drain;
          while (queues[i].pop(drain)) {}
        }
      });
    }
    std::vector<std::vector<PacketRecord>> pending(shards);
    FlowKeyHash hash;
    try {
      while (auto p = source.next()) {
        const auto s = hash(FlowKey::from_packet(*p)) % shards;
        pending[s].push_back(*p);
        if (pending[s].size() == kBatch) {
          queues[s].push(std::move(pending[s]));
          pending[s] = {};
          pending[s].reserve(kBatch);
        }
      }
    } catch (...) {
      for (auto& q : queues) q.close();
      throw;
    }
    for (unsigned i = 0; i < shards; ++i) {
      if (!pending[i].empty()) queues[i].push(std::move(pending[i]));
      queues[i].close();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<FlowRecord> all;
  ExtractSummary total;
  for (unsigned i = 0; i < shards; ++i) {
    for (auto& r : outputs[i]) all.push_back(std::move(r));
    const auto& t = summaries[i].table;
    total.flows += summaries[i].flows;
    total.table.packets += t.packets;
    total.table.bytes += t.bytes;
    total.table.flows_created += t.flows_created;
    total.table.flows_exported += t.flows_exported;
    total.table.active_splits += t.active_splits;
    total.table.inactive_expired += t.inactive_expired;
    total.table.evictions += t.evictions;
    total.table.reorders += t.reorders;
    total.table.state_bytes_peak += t.state_bytes_peak;
  }
  std::stable_sort(all.begin(), all.end(), [](const FlowRecord& l, const FlowRecord& r) {
    return std::tie(l.exported_at, l.key, l.base.t_first) < std::tie(r.exported_at, r.key, r.base.t_first);
  });
  for (auto& r : all) sink(std::move(r));
  return total;
}

}  // namespace nettisa
