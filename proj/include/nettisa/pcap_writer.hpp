#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "nettisa/packet.hpp"
#include "nettisa/pcap.hpp"

namespace nettisa {

/// Description of a synthetic packet for build_frame().
struct FrameSpec {
  IpAddress src_ip = IpAddress::v4(0x0a000001);
  IpAddress dst_ip = IpAddress::v4(0x0a000002);
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 17;
  std::uint32_t payload_len = 0;
  std::uint8_t tcp_flags = 0x10;
  std::optional<std::uint16_t> vlan;
};

namespace detail {

inline void put16(std::vector<std::uint8_t>& v, std::uint16_t x) {
  v.push_back(static_cast<std::uint8_t>(x >> 8));
  v.push_back(static_cast<std::uint8_t>(x));
}

inline std::uint16_t ipv4_checksum(const std::uint8_t* h, std::size_t len) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i + 1 < len; i += 2) sum += (h[i] << 8) | h[i + 1];
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

}  // namespace detail

/// Builds an Ethernet frame. With `snap` set, payload bytes are not materialized:
/// the frame ends after the transport header while the IP length fields still
/// declare the full payload (as a snaplen-limited capture would record it).
inline std::vector<std::uint8_t> build_frame(const FrameSpec& s, bool snap = false) {
  std::vector<std::uint8_t> f;
  f.reserve(64 + (snap ? 0 : s.payload_len));
  const std::uint8_t mac_dst[6] = {0x02, 0, 0, 0, 0, 2};
  const std::uint8_t mac_src[6] = {0x02, 0, 0, 0, 0, 1};
  f.insert(f.end(), mac_dst, mac_dst + 6);
  f.insert(f.end(), mac_src, mac_src + 6);
  if (s.vlan) {
    detail::put16(f, 0x8100);
    detail::put16(f, *s.vlan & 0x0fff);
  }
  detail::put16(f, s.src_ip.is_v4() ? 0x0800 : 0x86dd);

  std::size_t l4_header = 0;
  if (s.protocol == 6) l4_header = 20;
  else if (s.protocol == 17) l4_header = 8;
  const std::size_t l4_len = l4_header + s.payload_len;

  if (s.src_ip.is_v4()) {
    const std::size_t ip_start = f.size();
    const std::size_t total = 20 + l4_len;
    f.push_back(0x45);
    f.push_back(0);
    detail::put16(f, static_cast<std::uint16_t>(total));
    detail::put16(f, 0);
    detail::put16(f, 0x4000);  // don't fragment
    f.push_back(64);
    f.push_back(s.protocol);
    detail::put16(f, 0);
    f.insert(f.end(), s.src_ip.bytes().begin(), s.src_ip.bytes().begin() + 4);
    f.insert(f.end(), s.dst_ip.bytes().begin(), s.dst_ip.bytes().begin() + 4);
    const auto csum = detail::ipv4_checksum(f.data() + ip_start, 20);
    f[ip_start + 10] = static_cast<std::uint8_t>(csum >> 8);
    f[ip_start + 11] = static_cast<std::uint8_t>(csum);
  } else {
    f.push_back(0x60);
    f.push_back(0);
    detail::put16(f, 0);
    detail::put16(f, static_cast<std::uint16_t>(l4_len));
    f.push_back(s.protocol);
    f.push_back(64);
    f.insert(f.end(), s.src_ip.bytes().begin(), s.src_ip.bytes().end());
    f.insert(f.end(), s.dst_ip.bytes().begin(), s.dst_ip.bytes().end());
  }

  if (s.protocol == 6) {
    detail::put16(f, s.src_port);
    detail::put16(f, s.dst_port);
    for (int i = 0; i < 8; ++i) f.push_back(0);  // seq, ack
    f.push_back(0x50);
    f.push_back(s.tcp_flags);
    detail::put16(f, 0xffff);
    detail::put16(f, 0);
    detail::put16(f, 0);
  } else if (s.protocol == 17) {
    detail::put16(f, s.src_port);
    detail::put16(f, s.dst_port);
    detail::put16(f, static_cast<std::uint16_t>(l4_len));
    detail::put16(f, 0);
  }
  if (!snap) f.resize(f.size() + s.payload_len, 0xab);
  return f;
}

/// Writes classic little-endian microsecond pcap files.
class PcapWriter {
 public:
  explicit PcapWriter(const std::string& path, LinkType link = LinkType::ethernet,
                      std::uint32_t snaplen = 65535)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw CaptureError("cannot create capture file: " + path);
    put32(0xa1b2c3d4);
    put16(2);
    put16(4);
    put32(0);
    put32(0);
    put32(snaplen);
    put32(static_cast<std::uint32_t>(link));
  }

  void write(Micros ts, std::span<const std::uint8_t> frame, std::uint32_t original_len) {
    const auto us = ts.count();
    put32(static_cast<std::uint32_t>(us / 1'000'000));
    put32(static_cast<std::uint32_t>(us % 1'000'000));
    put32(static_cast<std::uint32_t>(frame.size()));
    put32(original_len);
    out_.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
    ++count_;
  }

  void write(Micros ts, std::span<const std::uint8_t> frame) {
    write(ts, frame, static_cast<std::uint32_t>(frame.size()));
  }

  void write(Micros ts, const FrameSpec& spec, bool snap = false) {
    const auto f = build_frame(spec, snap);
    const std::size_t full = f.size() + (snap ? spec.payload_len : 0);
    write(ts, f, static_cast<std::uint32_t>(full));
  }

  std::uint64_t count() const { return count_; }

  void close() { out_.close(); }

 private:
  void put16(std::uint16_t v) {
    const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    out_.write(b, 2);
  }
  void put32(std::uint32_t v) {
    const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 24)};
    out_.write(b, 4);
  }

  std::ofstream out_;
  std::uint64_t count_ = 0;
};

}  // namespace nettisa
