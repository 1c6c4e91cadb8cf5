#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nettisa/packet.hpp"

namespace nettisa {

enum class Direction : std::int8_t { forward = 1, reverse = -1 };

struct SpltPacket {
  std::uint32_t payload_len = 0;
  Direction direction = Direction::forward;
  Micros dt{0};  // gap to the previous packet, 0 for the first one

  friend bool operator==(const SpltPacket&, const SpltPacket&) = default;
};

/// Sequence of packet lengths and times for the first kLength packets of a flow.
/// Storage grows with the number of recorded packets and is capped at kLength.
class SpltState {
 public:
  static constexpr std::size_t kLength = 30;

  void update(std::uint32_t payload_len, Direction direction, Micros timestamp) {
    if (packets_.size() >= kLength) return;
    Micros dt{0};
    if (!packets_.empty()) {
      dt = std::max(Micros{0}, timestamp - prev_);
      prev_ = std::max(prev_, timestamp);
    } else {
      prev_ = timestamp;
    }
    if (packets_.size() == packets_.capacity())
      packets_.reserve(std::min(kLength, std::max<std::size_t>(4, packets_.capacity() * 2)));
    packets_.push_back({payload_len, direction, dt});
  }

  void push_unchecked(const SpltPacket& p) {
    if (packets_.size() < kLength) packets_.push_back(p);
  }

  std::size_t count() const { return packets_.size(); }
  std::span<const SpltPacket> packets() const { return packets_; }
  std::size_t heap_bytes() const { return packets_.capacity() * sizeof(SpltPacket); }

  friend bool operator==(const SpltState& a, const SpltState& b) { return a.packets_ == b.packets_; }

 private:
  std::vector<SpltPacket> packets_;
  Micros prev_{0};
};

struct CoverageCount {
  std::uint64_t flows = 0;
  std::uint64_t longer = 0;  // flows with more packets than an SPLT records
  double share() const { return flows ? static_cast<double>(longer) / static_cast<double>(flows) : 0.0; }
};

struct CoverageReport {
  CoverageCount total;
  std::map<std::string, CoverageCount> per_label;
  double share() const { return total.share(); }
};

/// Share of flows longer than SpltState::kLength packets, optionally per label.
/// `labels`, when non-empty, must be parallel to `packet_counts`.
inline CoverageReport splt_coverage(std::span<const std::uint64_t> packet_counts,
                                    std::span<const std::string> labels = {}) {
  if (packet_counts.empty()) throw std::invalid_argument("splt_coverage: empty flow set");
  if (!labels.empty() && labels.size() != packet_counts.size())
    throw std::invalid_argument("splt_coverage: labels and flows differ in length");
  CoverageReport report;
  for (std::size_t i = 0; i < packet_counts.size(); ++i) {
    const bool longer = packet_counts[i] > SpltState::kLength;
    ++report.total.flows;
    report.total.longer += longer;
    if (!labels.empty()) {
      auto& c = report.per_label[labels[i]];
      ++c.flows;
      c.longer += longer;
    }
  }
  return report;
}

}  // namespace nettisa
