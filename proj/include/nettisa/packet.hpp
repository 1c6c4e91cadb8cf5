#pragma once

#include <arpa/inet.h>

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>

namespace nettisa {

/// Capture timestamps. Microsecond resolution, counted from the Unix epoch.
using Micros = std::chrono::duration<std::int64_t, std::micro>;

inline double to_seconds(Micros t) { return static_cast<double>(t.count()) / 1e6; }

inline Micros from_seconds(double s) {
  return Micros{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
}

enum class AddressFamily : std::uint8_t { ipv4 = 4, ipv6 = 6 };

/// IPv4 or IPv6 address. IPv4 occupies the first four bytes, the rest are zero.
class IpAddress {
 public:
  IpAddress() = default;

  static IpAddress v4(std::span<const std::uint8_t, 4> b) {
    IpAddress a;
    a.family_ = AddressFamily::ipv4;
    std::memcpy(a.bytes_.data(), b.data(), 4);
    return a;
  }
  static IpAddress v4(std::uint32_t host_order) {
    std::array<std::uint8_t, 4> b{static_cast<std::uint8_t>(host_order >> 24),
                                  static_cast<std::uint8_t>(host_order >> 16),
                                  static_cast<std::uint8_t>(host_order >> 8),
                                  static_cast<std::uint8_t>(host_order)};
    return v4(std::span<const std::uint8_t, 4>(b));
  }
  static IpAddress v6(std::span<const std::uint8_t, 16> b) {
    IpAddress a;
    a.family_ = AddressFamily::ipv6;
    std::memcpy(a.bytes_.data(), b.data(), 16);
    return a;
  }

  static std::optional<IpAddress> parse(const std::string& text) {
    std::array<std::uint8_t, 16> buf{};
    if (::inet_pton(AF_INET, text.c_str(), buf.data()) == 1)
      return v4(std::span<const std::uint8_t, 4>(buf.data(), 4));
    if (::inet_pton(AF_INET6, text.c_str(), buf.data()) == 1)
      return v6(std::span<const std::uint8_t, 16>(buf));
    return std::nullopt;
  }

  AddressFamily family() const { return family_; }
  bool is_v4() const { return family_ == AddressFamily::ipv4; }
  std::size_t size() const { return is_v4() ? 4 : 16; }
  const std::array<std::uint8_t, 16>& bytes() const { return bytes_; }

  std::string to_string() const {
    char out[INET6_ADDRSTRLEN] = {};
    ::inet_ntop(is_v4() ? AF_INET : AF_INET6, bytes_.data(), out, sizeof(out));
    return out;
  }

  friend auto operator<=>(const IpAddress&, const IpAddress&) = default;
  friend bool operator==(const IpAddress&, const IpAddress&) = default;

 private:
  AddressFamily family_ = AddressFamily::ipv4;
  std::array<std::uint8_t, 16> bytes_{};
};

/// One observed IP packet, reduced to what flow metering needs.
struct PacketRecord {
  Micros timestamp{0};
  IpAddress src_ip;
  IpAddress dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;
  // Transport payload for TCP/UDP, bytes after the IP header(s) otherwise.
  std::uint32_t payload_len = 0;

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// Link-layer header types (pcap LINKTYPE_* values) understood by parse_packet.
enum class LinkType : std::uint32_t {
  null_loopback = 0,
  ethernet = 1,
  raw_ip_legacy = 12,
  raw_ip = 101,
  linux_sll = 113,
  ipv4 = 228,
  ipv6 = 229,
};

inline bool is_supported_link_type(std::uint32_t v) {
  switch (v) {
    case 0: case 1: case 12: case 101: case 113: case 228: case 229:
      return true;
    default:
      return false;
  }
}

enum class ParseStatus { ok, not_ip, malformed };

struct ParseResult {
  ParseStatus status = ParseStatus::malformed;
  PacketRecord packet;
};

namespace detail {

inline std::uint16_t be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

inline bool is_ipv6_extension(std::uint8_t next_header) {
  switch (next_header) {
    case 0:    // hop-by-hop
    case 43:   // routing
    case 44:   // fragment
    case 51:   // authentication header
    case 60:   // destination options
    case 135:  // mobility
      return true;
    default:
      return false;
  }
}

// Fills ports and payload_len from the transport header at `l4`.
// `l4_len` is the transport segment length implied by the IP header(s);
// `captured` is how many of those bytes are actually in the frame.
inline ParseStatus parse_transport(std::uint8_t protocol, const std::uint8_t* l4,
                                   std::size_t l4_len, std::size_t captured,
                                   bool first_fragment_only, PacketRecord& out) {
  out.protocol = protocol;
  switch (protocol) {
    case 6: {  // TCP
      if (captured < 20 || l4_len < 20) return ParseStatus::malformed;
      const std::size_t header = static_cast<std::size_t>(l4[12] >> 4) * 4;
      if (header < 20 || header > l4_len) return ParseStatus::malformed;
      out.src_port = be16(l4);
      out.dst_port = be16(l4 + 2);
      out.payload_len = static_cast<std::uint32_t>(l4_len - header);
      return ParseStatus::ok;
    }
    case 17: {  // UDP
      if (captured < 8 || l4_len < 8) return ParseStatus::malformed;
      out.src_port = be16(l4);
      out.dst_port = be16(l4 + 2);
      const std::size_t udp_len = be16(l4 + 4);
      if (first_fragment_only) {
        out.payload_len = static_cast<std::uint32_t>(l4_len - 8);
      } else {
        if (udp_len < 8 || udp_len > l4_len) return ParseStatus::malformed;
        out.payload_len = static_cast<std::uint32_t>(udp_len - 8);
      }
      return ParseStatus::ok;
    }
    default:
      out.src_port = 0;
      out.dst_port = 0;
      out.payload_len = static_cast<std::uint32_t>(l4_len);
      return ParseStatus::ok;
  }
}

inline ParseStatus parse_ipv4(std::span<const std::uint8_t> ip, PacketRecord& out) {
  if (ip.size() < 20) return ParseStatus::malformed;
  if ((ip[0] >> 4) != 4) return ParseStatus::malformed;
  const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
  const std::size_t total = be16(ip.data() + 2);
  if (ihl < 20 || total < ihl || ip.size() < ihl) return ParseStatus::malformed;

  out.src_ip = IpAddress::v4(std::span<const std::uint8_t, 4>(ip.data() + 12, 4));
  out.dst_ip = IpAddress::v4(std::span<const std::uint8_t, 4>(ip.data() + 16, 4));

  const std::uint16_t frag = be16(ip.data() + 6);
  const std::uint16_t offset = frag & 0x1fff;
  const bool more_fragments = (frag & 0x2000) != 0;
  const std::uint8_t protocol = ip[9];
  const std::size_t l4_len = total - ihl;

  if (offset != 0) {
    // Non-first fragment: no transport header, joins the portless flow.
    out.protocol = protocol;
    out.src_port = out.dst_port = 0;
    out.payload_len = static_cast<std::uint32_t>(l4_len);
    return ParseStatus::ok;
  }
  const std::size_t captured = std::min(ip.size() - ihl, l4_len);
  return parse_transport(protocol, ip.data() + ihl, l4_len, captured, more_fragments, out);
}

inline ParseStatus parse_ipv6(std::span<const std::uint8_t> ip, PacketRecord& out) {
  if (ip.size() < 40) return ParseStatus::malformed;
  if ((ip[0] >> 4) != 6) return ParseStatus::malformed;
  const std::size_t payload_length = be16(ip.data() + 4);
  if (payload_length == 0) return ParseStatus::malformed;  // jumbograms unsupported

  out.src_ip = IpAddress::v6(std::span<const std::uint8_t, 16>(ip.data() + 8, 16));
  out.dst_ip = IpAddress::v6(std::span<const std::uint8_t, 16>(ip.data() + 24, 16));

  std::uint8_t next = ip[6];
  std::size_t pos = 40;
  const std::size_t end = 40 + payload_length;
  bool first_fragment_only = false;

  while (is_ipv6_extension(next)) {
    if (pos + 8 > end || pos + 8 > ip.size()) return ParseStatus::malformed;
    const std::uint8_t following = ip[pos];
    std::size_t len = 0;
    if (next == 44) {
      len = 8;
      const std::uint16_t frag = be16(ip.data() + pos + 2);
      const std::uint16_t offset = frag >> 3;
      if (offset != 0) {
        out.protocol = following;
        out.src_port = out.dst_port = 0;
        out.payload_len = static_cast<std::uint32_t>(end - pos - len);
        return ParseStatus::ok;
      }
      first_fragment_only = (frag & 1) != 0;
    } else if (next == 51) {
      len = (static_cast<std::size_t>(ip[pos + 1]) + 2) * 4;
    } else {
      len = (static_cast<std::size_t>(ip[pos + 1]) + 1) * 8;
    }
    if (pos + len > end) return ParseStatus::malformed;
    pos += len;
    next = following;
  }
  if (next == 59) {  // no next header
    out.protocol = next;
    out.src_port = out.dst_port = 0;
    out.payload_len = 0;
    return ParseStatus::ok;
  }
  const std::size_t captured = ip.size() > pos ? std::min(ip.size() - pos, end - pos) : 0;
  return parse_transport(next, ip.data() + pos, end - pos, captured, first_fragment_only, out);
}

inline ParseStatus parse_ip(std::span<const std::uint8_t> ip, PacketRecord& out) {
  if (ip.empty()) return ParseStatus::malformed;
  switch (ip[0] >> 4) {
    case 4: return parse_ipv4(ip, out);
    case 6: return parse_ipv6(ip, out);
    default: return ParseStatus::not_ip;
  }
}

inline ParseStatus parse_ethertype(std::uint16_t ethertype, std::span<const std::uint8_t> rest,
                                   PacketRecord& out) {
  if (ethertype == 0x0800) {
    if (!rest.empty() && (rest[0] >> 4) != 4) return ParseStatus::malformed;
    return parse_ipv4(rest, out);
  }
  if (ethertype == 0x86dd) {
    if (!rest.empty() && (rest[0] >> 4) != 6) return ParseStatus::malformed;
    return parse_ipv6(rest, out);
  }
  return ParseStatus::not_ip;
}

}  // namespace detail

/// Decodes one captured frame. Ethernet may carry any number of 802.1Q/802.1ad tags.
/// Payload length comes from the IP length fields, so snaplen-truncated frames still
/// decode as long as the headers were captured.
inline ParseResult parse_packet(std::span<const std::uint8_t> raw, LinkType link, Micros ts) {
  ParseResult r;
  r.packet.timestamp = ts;
  PacketRecord& p = r.packet;

  switch (link) {
    case LinkType::ethernet: {
      if (raw.size() < 14) { r.status = ParseStatus::malformed; return r; }
      std::size_t pos = 12;
      std::uint16_t ethertype = detail::be16(raw.data() + pos);
      pos += 2;
      while (ethertype == 0x8100 || ethertype == 0x88a8 || ethertype == 0x9100) {
        if (raw.size() < pos + 4) { r.status = ParseStatus::malformed; return r; }
        ethertype = detail::be16(raw.data() + pos + 2);
        pos += 4;
      }
      r.status = detail::parse_ethertype(ethertype, raw.subspan(pos), p);
      return r;
    }
    case LinkType::linux_sll: {
      if (raw.size() < 16) { r.status = ParseStatus::malformed; return r; }
      r.status = detail::parse_ethertype(detail::be16(raw.data() + 14), raw.subspan(16), p);
      return r;
    }
    case LinkType::null_loopback: {
      if (raw.size() < 4) { r.status = ParseStatus::malformed; return r; }
      // Address family in host byte order of the capturing machine; try both.
      std::uint32_t le = raw[0] | (raw[1] << 8) | (raw[2] << 16) | (static_cast<std::uint32_t>(raw[3]) << 24);
      std::uint32_t be = (static_cast<std::uint32_t>(raw[0]) << 24) | (raw[1] << 16) | (raw[2] << 8) | raw[3];
      auto family = (le < 256) ? le : be;
      if (family == 2) {
        r.status = detail::parse_ipv4(raw.subspan(4), p);
      } else if (family == 24 || family == 28 || family == 30 || family == 10) {
        r.status = detail::parse_ipv6(raw.subspan(4), p);
      } else {
        r.status = ParseStatus::not_ip;
      }
      return r;
    }
    case LinkType::raw_ip:
    case LinkType::raw_ip_legacy:
      r.status = detail::parse_ip(raw, p);
      return r;
    case LinkType::ipv4:
      r.status = detail::parse_ipv4(raw, p);
      return r;
    case LinkType::ipv6:
      r.status = detail::parse_ipv6(raw, p);
      return r;
  }
  r.status = ParseStatus::not_ip;
  return r;
}

}  // namespace nettisa
