#pragma once

#include <algorithm>
#include <chrono>
#include <concepts>
#include <cstdint>
#include <list>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "nettisa/flow_key.hpp"
#include "nettisa/packet.hpp"
#include "nettisa/splt.hpp"

namespace nettisa {

struct TableConfig {
  Micros active_timeout = std::chrono::seconds{300};
  Micros inactive_timeout = std::chrono::seconds{65};
  std::size_t max_entries = 1u << 22;          // 0 means unbounded
  std::optional<Micros> forced_flush_interval;  // benchmark mode
};

enum class ExportReason { active_timeout, inactive_timeout, forced_flush, eviction, end_of_input };

inline const char* to_string(ExportReason r) {
  switch (r) {
    case ExportReason::active_timeout: return "active";
    case ExportReason::inactive_timeout: return "inactive";
    case ExportReason::forced_flush: return "forced";
    case ExportReason::eviction: return "eviction";
    case ExportReason::end_of_input: return "end";
  }
  return "?";
}

struct TableCounters {
  std::uint64_t packets = 0;
  std::uint64_t bytes = 0;
  std::uint64_t flows_created = 0;
  std::uint64_t flows_exported = 0;
  std::uint64_t active_splits = 0;
  std::uint64_t inactive_expired = 0;
  std::uint64_t forced_flushes = 0;
  std::uint64_t evictions = 0;
  std::uint64_t reorders = 0;
  std::size_t state_bytes = 0;  // footprint of live entries
  std::size_t state_bytes_peak = 0;
};

/// Feature policy requirements:
///   typename State;
///   static void update(State&, const PacketRecord&, Direction);
///   static std::size_t heap_bytes(const State&);
///   static constexpr bool kDynamicSize;   // heap_bytes may change per packet
template <class Policy>
concept FeaturePolicy = requires(typename Policy::State& s, const PacketRecord& p) {
  Policy::update(s, p, Direction::forward);
  { Policy::heap_bytes(s) } -> std::convertible_to<std::size_t>;
  { Policy::kDynamicSize } -> std::convertible_to<bool>;
};

/// Bidirectional flow cache with active/inactive timeouts.
///
/// Exports go to a sink callable as sink(Entry&&, ExportReason, Micros at), where
/// `at` is the table clock (latest packet timestamp seen, or the expire() time).
template <FeaturePolicy Policy>
class FlowTable {
 public:
  using State = typename Policy::State;

  struct Entry {
    FlowKey key;
    FlowBase base;
    State state{};
  };

  explicit FlowTable(TableConfig config = {}) : config_(config) {
    if (config_.max_entries != 0) index_.reserve(std::min<std::size_t>(config_.max_entries, 1u << 16));
  }

  template <class Sink>
  void ingest(const PacketRecord& p, Sink&& sink) {
    const Micros t = p.timestamp;
    if (!started_) {
      started_ = true;
      clock_ = t;
      if (config_.forced_flush_interval) next_flush_ = t + *config_.forced_flush_interval;
    }
    if (t > clock_) clock_ = t;
    if (config_.forced_flush_interval && clock_ >= next_flush_) {
      flush(sink, ExportReason::forced_flush);
      ++counters_.forced_flushes;
      while (next_flush_ <= clock_) next_flush_ += *config_.forced_flush_interval;
    }
    sweep_idle(sink);

    const FlowKey key = FlowKey::from_packet(p);
    auto found = index_.find(key);
    if (found != index_.end()) {
      const Entry& e = *found->second;
      if (t - e.base.t_first >= config_.active_timeout) {
        ++counters_.active_splits;
        export_entry(found->second, sink, ExportReason::active_timeout);
        found = index_.end();
      } else if (t - e.base.t_last >= config_.inactive_timeout) {
        ++counters_.inactive_expired;
        export_entry(found->second, sink, ExportReason::inactive_timeout);
        found = index_.end();
      }
    }

    typename List::iterator it;
    if (found == index_.end()) {
      if (config_.max_entries != 0 && lru_.size() >= config_.max_entries) {
        ++counters_.evictions;
        export_entry(lru_.begin(), sink, ExportReason::eviction);
      }
      lru_.push_back(Entry{key, FlowBase{}, State{}});
      it = std::prev(lru_.end());
      index_.emplace(key, it);
      it->base.initiator_is_a = (Endpoint{p.src_ip, p.src_port} == key.a);
      it->base.t_first = t;
      it->base.t_last = t;
      ++counters_.flows_created;
      add_footprint(sizeof(Entry) + Policy::heap_bytes(it->state));
    } else {
      it = found->second;
      lru_.splice(lru_.end(), lru_, it);
    }

    Entry& e = *it;
    const bool from_a = (Endpoint{p.src_ip, p.src_port} == key.a);
    const Direction dir = (from_a == e.base.initiator_is_a) ? Direction::forward : Direction::reverse;
    if (dir == Direction::forward) {
      ++e.base.packets_fwd;
      e.base.bytes_fwd += p.payload_len;
    } else {
      ++e.base.packets_rev;
      e.base.bytes_rev += p.payload_len;
    }
    if (t < e.base.t_last) ++counters_.reorders;
    e.base.t_first = std::min(e.base.t_first, t);
    e.base.t_last = std::max(e.base.t_last, t);
    ++counters_.packets;
    counters_.bytes += p.payload_len;

    if constexpr (Policy::kDynamicSize) {
      const std::size_t before = Policy::heap_bytes(e.state);
      Policy::update(e.state, p, dir);
      const std::size_t after = Policy::heap_bytes(e.state);
      if (after != before) {
        counters_.state_bytes -= before;
        add_footprint(after);
      }
    } else {
      Policy::update(e.state, p, dir);
    }
  }

  /// Exports every entry idle for at least the inactive timeout at time `now`.
  template <class Sink>
  void expire(Micros now, Sink&& sink) {
    if (now > clock_) clock_ = now;
    std::vector<typename List::iterator> idle;
    for (auto it = lru_.begin(); it != lru_.end(); ++it)
      if (now - it->base.t_last >= config_.inactive_timeout) idle.push_back(it);
    std::sort(idle.begin(), idle.end(), [](auto l, auto r) {
      return std::tie(l->base.t_last, l->key) < std::tie(r->base.t_last, r->key);
    });
    for (auto it : idle) {
      ++counters_.inactive_expired;
      export_entry(it, sink, ExportReason::inactive_timeout);
    }
  }

  /// Exports all remaining entries in key order (end of input).
  template <class Sink>
  void finish(Sink&& sink) {
    flush(sink, ExportReason::end_of_input);
  }

  std::size_t size() const { return lru_.size(); }
  const TableCounters& counters() const { return counters_; }
  const TableConfig& config() const { return config_; }
  Micros clock() const { return clock_; }

 private:
  using List = std::list<Entry>;

  void add_footprint(std::size_t bytes) {
    counters_.state_bytes += bytes;
    counters_.state_bytes_peak = std::max(counters_.state_bytes_peak, counters_.state_bytes);
  }

  template <class Sink>
  void export_entry(typename List::iterator it, Sink& sink, ExportReason reason) {
    counters_.state_bytes -= sizeof(Entry) + Policy::heap_bytes(it->state);
    index_.erase(it->key);
    Entry e = std::move(*it);
    lru_.erase(it);
    ++counters_.flows_exported;
    sink(std::move(e), reason, clock_);
  }

  // Entries are kept in touch order, so idle ones gather at the front.
  template <class Sink>
  void sweep_idle(Sink& sink) {
    while (!lru_.empty() && clock_ - lru_.front().base.t_last >= config_.inactive_timeout) {
      ++counters_.inactive_expired;
      export_entry(lru_.begin(), sink, ExportReason::inactive_timeout);
    }
  }

  template <class Sink>
  void flush(Sink& sink, ExportReason reason) {
    std::vector<typename List::iterator> all;
    all.reserve(lru_.size());
    for (auto it = lru_.begin(); it != lru_.end(); ++it) all.push_back(it);
    std::sort(all.begin(), all.end(), [](auto l, auto r) { return l->key < r->key; });
    for (auto it : all) export_entry(it, sink, reason);
  }

  TableConfig config_;
  List lru_;
  std::unordered_map<FlowKey, typename List::iterator, FlowKeyHash> index_;
  TableCounters counters_;
  bool started_ = false;
  Micros clock_{0};
  Micros next_flush_{0};
};

}  // namespace nettisa
