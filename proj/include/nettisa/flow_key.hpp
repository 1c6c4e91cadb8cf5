#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <tuple>

#include "nettisa/packet.hpp"

namespace nettisa {

struct Endpoint {
  IpAddress ip;
  std::uint16_t port = 0;

  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Direction-independent flow identity: endpoint `a` is never greater than `b`.
struct FlowKey {
  Endpoint a;
  Endpoint b;
  std::uint8_t protocol = 0;

  static FlowKey from_packet(const PacketRecord& p) {
    Endpoint src{p.src_ip, p.src_port};
    Endpoint dst{p.dst_ip, p.dst_port};
    if (dst < src) std::swap(src, dst);
    return FlowKey{src, dst, p.protocol};
  }

  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
  friend bool operator==(const FlowKey&, const FlowKey&) = default;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept {
    // FNV-1a over the address bytes, ports and protocol.
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint8_t byte) {
      h ^= byte;
      h *= 0x100000001b3ull;
    };
    const std::size_t n = k.a.ip.size();
    for (std::size_t i = 0; i < n; ++i) mix(k.a.ip.bytes()[i]);
    for (std::size_t i = 0; i < n; ++i) mix(k.b.ip.bytes()[i]);
    mix(static_cast<std::uint8_t>(k.a.port));
    mix(static_cast<std::uint8_t>(k.a.port >> 8));
    mix(static_cast<std::uint8_t>(k.b.port));
    mix(static_cast<std::uint8_t>(k.b.port >> 8));
    mix(k.protocol);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

/// Classic bidirectional flow counters. "Forward" is the direction of the
/// endpoint that sent the first packet of this flow instance.
struct FlowBase {
  bool initiator_is_a = true;
  Micros t_first{0};
  Micros t_last{0};
  std::uint64_t packets_fwd = 0;
  std::uint64_t packets_rev = 0;
  std::uint64_t bytes_fwd = 0;
  std::uint64_t bytes_rev = 0;

  std::uint64_t packets() const { return packets_fwd + packets_rev; }
  std::uint64_t bytes() const { return bytes_fwd + bytes_rev; }
  double duration_seconds() const { return to_seconds(t_last - t_first); }

  friend bool operator==(const FlowBase&, const FlowBase&) = default;
};

/// The flow key oriented from initiator to responder.
inline std::pair<Endpoint, Endpoint> oriented(const FlowKey& key, const FlowBase& base) {
  return base.initiator_is_a ? std::pair{key.a, key.b} : std::pair{key.b, key.a};
}

}  // namespace nettisa
