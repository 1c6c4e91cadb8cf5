#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nettisa/pcap_writer.hpp"

namespace nettisa {

/// Generators for synthetic captures. Frames are written snaplen-truncated
/// (headers only); IP length fields declare the full payload.
namespace synth {

inline constexpr std::int64_t kEpoch = 1'700'000'000LL * 1'000'000;

inline FrameSpec udp_flow(std::uint32_t index, bool reverse = false) {
  FrameSpec s;
  s.protocol = 17;
  s.src_ip = IpAddress::v4(0x0a000000u + (index & 0xffff));
  s.dst_ip = IpAddress::v4(0xc0a80000u + ((index >> 16) & 0xffff) + 1);
  s.src_port = static_cast<std::uint16_t>(1024 + index % 60000);
  s.dst_port = 443;
  if (reverse) {
    std::swap(s.src_ip, s.dst_ip);
    std::swap(s.src_port, s.dst_port);
  }
  return s;
}

/// One flow, evenly spaced packets over [0, duration), uniformly random payloads
/// in [80, 1400] bytes.
inline std::uint64_t single_flow_stress(const std::string& path, double duration_s, double packets_per_second,
                                        std::uint64_t seed = 1) {
  PcapWriter w(path, LinkType::ethernet, 128);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> size(80, 1400);
  const auto count = static_cast<std::uint64_t>(duration_s * packets_per_second);
  for (std::uint64_t i = 0; i < count; ++i) {
    FrameSpec s = udp_flow(0);
    s.payload_len = size(rng);
    const auto ts = Micros{kEpoch + static_cast<std::int64_t>(static_cast<double>(i) * 1e6 / packets_per_second)};
    w.write(ts, s, true);
  }
  return w.count();
}

/// One flow with a packet every `interval_s` from t=0 to t=end_s inclusive.
inline std::uint64_t periodic_flow(const std::string& path, double end_s, double interval_s,
                                   std::uint32_t payload = 100) {
  PcapWriter w(path, LinkType::ethernet, 128);
  for (double t = 0; t <= end_s + 1e-9; t += interval_s) {
    FrameSpec s = udp_flow(0);
    s.payload_len = payload;
    w.write(Micros{kEpoch} + from_seconds(t), s, true);
  }
  return w.count();
}

/// `flows` concurrent bidirectional flows, `packets` in total, round-robin with
/// random gaps and payloads. Mirrors a busy link at desk scale.
inline std::uint64_t mixed_traffic(const std::string& path, std::uint64_t packets, std::uint32_t flows,
                                   std::uint64_t seed = 7) {
  PcapWriter w(path, LinkType::ethernet, 128);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> size(0, 1460);
  std::uniform_int_distribution<std::uint32_t> pick(0, flows - 1);
  std::bernoulli_distribution reverse(0.4);
  std::exponential_distribution<double> gap(20000.0);  // mean 50 us between packets
  double t = 0;
  for (std::uint64_t i = 0; i < packets; ++i) {
    t += gap(rng);
    FrameSpec s = udp_flow(pick(rng), reverse(rng));
    s.payload_len = size(rng);
    w.write(Micros{kEpoch} + from_seconds(t), s, true);
  }
  return w.count();
}

/// Two labeled classes for end-to-end tests: class A sends constant 1460-byte
/// payloads every 10 ms; class B alternates 64/512-byte payloads with jittered gaps.
inline void two_class_corpus(const std::string& path_a, const std::string& path_b, std::uint32_t flows,
                             std::uint32_t packets_per_flow, std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.001, 0.2);
  {
    PcapWriter w(path_a, LinkType::ethernet, 128);
    for (std::uint32_t f = 0; f < flows; ++f) {
      const double start = f * 0.5;
      for (std::uint32_t i = 0; i < packets_per_flow; ++i) {
        FrameSpec s = udp_flow(f);
        s.payload_len = 1460;
        w.write(Micros{kEpoch} + from_seconds(start + i * 0.010), s, true);
      }
    }
  }
  {
    PcapWriter w(path_b, LinkType::ethernet, 128);
    for (std::uint32_t f = 0; f < flows; ++f) {
      double t = f * 0.5;
      for (std::uint32_t i = 0; i < packets_per_flow; ++i) {
        FrameSpec s = udp_flow(f + 100000, i % 2 == 1);
        s.payload_len = i % 2 ? 512 : 64;
        w.write(Micros{kEpoch} + from_seconds(t), s, true);
        t += jitter(rng);
      }
    }
  }
}

}  // namespace synth
}  // namespace nettisa
