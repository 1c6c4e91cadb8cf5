#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nettisa/packet.hpp"

namespace nettisa {

/// Fatal problem with a capture file (unreadable, unknown format or link type).
class CaptureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CaptureCounters {
  std::uint64_t frames = 0;     // complete frame records seen
  std::uint64_t yielded = 0;    // decoded IP packets
  std::uint64_t skipped = 0;    // non-IP frames
  std::uint64_t malformed = 0;  // IP frames with broken headers
  bool truncated = false;       // the file ended inside a record
};

/// Sequential reader for classic pcap (either byte order, micro- or nanosecond
/// timestamps) and pcapng. next() yields decoded IP packets in file order.
class CaptureReader {
 public:
  explicit CaptureReader(const std::string& path) : path_(path) {
    in_.rdbuf()->pubsetbuf(buffer_.get(), kBufferSize);
    in_.open(path, std::ios::binary);
    if (!in_) throw CaptureError("cannot open capture file: " + path);

    std::array<std::uint8_t, 4> magic{};
    if (!read_exact(magic.data(), 4)) {
      // Zero-length files are treated as empty captures.
      if (in_.gcount() == 0) {
        eof_ = true;
        return;
      }
      throw CaptureError("capture file too short: " + path);
    }
    const std::uint32_t m = load_le32(magic.data());
    if (m == 0x0a0d0d0a) {
      format_ = Format::pcapng;
      read_section_header_body();
    } else {
      format_ = Format::pcap;
      read_pcap_header(magic);
    }
  }

  CaptureReader(const CaptureReader&) = delete;
  CaptureReader& operator=(const CaptureReader&) = delete;

  /// Next decoded packet, or nullopt at end of file.
  std::optional<PacketRecord> next() {
    while (!eof_) {
      Frame frame;
      if (!(format_ == Format::pcap ? next_pcap_frame(frame) : next_pcapng_frame(frame))) break;
      ++counters_.frames;
      auto r = parse_packet(std::span<const std::uint8_t>(frame_.data(), frame.captured),
                            frame.link, frame.ts);
      switch (r.status) {
        case ParseStatus::ok:
          ++counters_.yielded;
          return r.packet;
        case ParseStatus::not_ip:
          ++counters_.skipped;
          break;
        case ParseStatus::malformed:
          ++counters_.malformed;
          break;
      }
    }
    return std::nullopt;
  }

  const CaptureCounters& counters() const { return counters_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::string& path() const { return path_; }

 private:
  enum class Format { pcap, pcapng };

  struct Frame {
    Micros ts{0};
    LinkType link = LinkType::ethernet;
    std::size_t captured = 0;
  };

  struct Interface {
    LinkType link = LinkType::ethernet;
    // Timestamp units per second and whether they are a power of two.
    std::uint64_t units_per_second = 1'000'000;
  };

  static constexpr std::size_t kBufferSize = 1 << 20;
  static constexpr std::size_t kMaxFrame = 256 * 1024;

  static std::uint32_t load_le32(const std::uint8_t* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  std::uint16_t load16(const std::uint8_t* p) const {
    return swap_ ? static_cast<std::uint16_t>((p[0] << 8) | p[1])
                 : static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t load32(const std::uint8_t* p) const {
    return swap_ ? (static_cast<std::uint32_t>(p[0]) << 24) | (p[1] << 16) | (p[2] << 8) | p[3]
                 : load_le32(p);
  }

  bool read_exact(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in_.gcount()) == n;
  }

  void warn_truncated() {
    counters_.truncated = true;
    warnings_.push_back(path_ + ": truncated last record skipped");
    eof_ = true;
  }

  static LinkType checked_link(std::uint32_t v, const std::string& path) {
    if (!is_supported_link_type(v))
      throw CaptureError(path + ": unsupported link type " + std::to_string(v));
    return static_cast<LinkType>(v);
  }

  // --- classic pcap ---------------------------------------------------------

  void read_pcap_header(const std::array<std::uint8_t, 4>& magic) {
    const std::uint32_t m = load_le32(magic.data());
    switch (m) {
      case 0xa1b2c3d4: swap_ = false; nanos_ = false; break;
      case 0xd4c3b2a1: swap_ = true; nanos_ = false; break;
      case 0xa1b23c4d: swap_ = false; nanos_ = true; break;
      case 0x4d3cb2a1: swap_ = true; nanos_ = true; break;
      default: throw CaptureError("not a pcap or pcapng file: " + path_);
    }
    std::array<std::uint8_t, 20> rest{};
    if (!read_exact(rest.data(), rest.size()))
      throw CaptureError("truncated pcap file header: " + path_);
    pcap_link_ = checked_link(load32(rest.data() + 16) & 0x0fffffff, path_);
  }

  bool next_pcap_frame(Frame& f) {
    std::array<std::uint8_t, 16> hdr{};
    if (!read_exact(hdr.data(), hdr.size())) {
      if (in_.gcount() != 0) warn_truncated();
      eof_ = true;
      return false;
    }
    const std::int64_t sec = load32(hdr.data());
    const std::int64_t frac = load32(hdr.data() + 4);
    const std::size_t incl = load32(hdr.data() + 8);
    if (incl > kMaxFrame) {
      warnings_.push_back(path_ + ": implausible record length " + std::to_string(incl) + ", stopping");
      counters_.truncated = true;
      eof_ = true;
      return false;
    }
    frame_.resize(std::max(frame_.size(), incl));
    if (!read_exact(frame_.data(), incl)) {
      warn_truncated();
      return false;
    }
    f.ts = Micros{sec * 1'000'000 + (nanos_ ? frac / 1000 : frac)};
    f.link = pcap_link_;
    f.captured = incl;
    return true;
  }

  // --- pcapng ---------------------------------------------------------------

  // Called after the 4-byte block type of a section header has been consumed.
  void read_section_header_body() {
    std::array<std::uint8_t, 8> head{};
    if (!read_exact(head.data(), head.size()))
      throw CaptureError("truncated pcapng section header: " + path_);
    const std::uint32_t bom = load_le32(head.data() + 4);
    if (bom == 0x1a2b3c4d) {
      swap_ = false;
    } else if (bom == 0x4d3c2b1a) {
      swap_ = true;
    } else {
      throw CaptureError("bad pcapng byte-order magic: " + path_);
    }
    const std::uint32_t total = load32(head.data());
    if (total < 28 || total % 4 != 0) throw CaptureError("bad pcapng section length: " + path_);
    std::vector<std::uint8_t> skip(total - 12);
    if (!read_exact(skip.data(), skip.size()))
      throw CaptureError("truncated pcapng section header: " + path_);
    interfaces_.clear();
  }

  void read_interface(const std::uint8_t* body, std::size_t len) {
    if (len < 8) throw CaptureError(path_ + ": malformed pcapng interface block");
    Interface iface;
    iface.link = checked_link(load16(body), path_);
    std::size_t pos = 8;
    while (pos + 4 <= len) {
      const std::uint16_t code = load16(body + pos);
      const std::uint16_t olen = load16(body + pos + 2);
      pos += 4;
      if (code == 0 || pos + olen > len) break;
      if (code == 9 && olen >= 1) {  // if_tsresol
        const std::uint8_t res = body[pos];
        const std::uint32_t exp = res & 0x7f;
        if (exp > 63) throw CaptureError(path_ + ": unsupported timestamp resolution");
        std::uint64_t units = 1;
        for (std::uint32_t i = 0; i < exp; ++i) units *= (res & 0x80) ? 2 : 10;
        iface.units_per_second = units;
      }
      pos += (olen + 3u) & ~3u;
    }
    interfaces_.push_back(iface);
  }

  Micros to_micros(std::uint64_t ticks, const Interface& iface) const {
    const auto ups = iface.units_per_second;
    const auto sec = ticks / ups;
    const auto rem = ticks % ups;
    // rem < ups, so the product only overflows for resolutions finer than ~1e13/s.
    const auto sub = ups <= UINT64_MAX / 1'000'000
                         ? static_cast<std::int64_t>(rem * 1'000'000 / ups)
                         : static_cast<std::int64_t>(static_cast<long double>(rem) * 1e6L / ups);
    return Micros{static_cast<std::int64_t>(sec) * 1'000'000 + sub};
  }

  bool next_pcapng_frame(Frame& f) {
    for (;;) {
      std::array<std::uint8_t, 8> head{};
      if (!read_exact(head.data(), head.size())) {
        if (in_.gcount() != 0) warn_truncated();
        eof_ = true;
        return false;
      }
      const std::uint32_t type = load_le32(head.data());
      if (type == 0x0a0d0d0a) {
        // New section: byte order may change, re-read from the length field.
        in_.seekg(-4, std::ios::cur);
        read_section_header_body();
        continue;
      }
      const std::uint32_t total = load32(head.data() + 4);
      if (total < 12 || total % 4 != 0 || total > kMaxFrame + 64) {
        warnings_.push_back(path_ + ": corrupt pcapng block, stopping");
        counters_.truncated = true;
        eof_ = true;
        return false;
      }
      const std::size_t body_len = total - 12;
      block_.resize(body_len + 4);
      if (!read_exact(block_.data(), body_len + 4)) {
        warn_truncated();
        return false;
      }
      const std::uint8_t* body = block_.data();

      switch (type) {
        case 1:
          read_interface(body, body_len);
          break;
        case 6:    // enhanced packet block
        case 2: {  // obsolete packet block
          if (body_len < 20) {
            ++counters_.frames;
            ++counters_.malformed;
            break;
          }
          const std::uint32_t iface_id = type == 6 ? load32(body) : load16(body);
          if (iface_id >= interfaces_.size())
            throw CaptureError(path_ + ": packet references unknown interface " + std::to_string(iface_id));
          const Interface& iface = interfaces_[iface_id];
          const std::uint64_t ticks =
              (static_cast<std::uint64_t>(load32(body + 4)) << 32) | load32(body + 8);
          const std::size_t captured = load32(body + 12);
          if (20 + captured > body_len) {
            ++counters_.frames;
            ++counters_.malformed;
            break;
          }
          frame_.assign(body + 20, body + 20 + captured);
          f.ts = to_micros(ticks, iface);
          f.link = iface.link;
          f.captured = captured;
          return true;
        }
        case 3:  // simple packet block: no timestamp, cannot join the time series
          ++counters_.frames;
          ++counters_.skipped;
          break;
        default:
          break;
      }
    }
  }

  std::string path_;
  std::unique_ptr<char[]> buffer_ = std::make_unique<char[]>(kBufferSize);
  std::ifstream in_;
  Format format_ = Format::pcap;
  bool swap_ = false;
  bool nanos_ = false;
  bool eof_ = false;
  LinkType pcap_link_ = LinkType::ethernet;
  std::vector<Interface> interfaces_;
  std::vector<std::uint8_t> frame_;
  std::vector<std::uint8_t> block_;
  CaptureCounters counters_;
  std::vector<std::string> warnings_;
};

/// Opens a pcap/pcapng file. Throws CaptureError on unreadable files or unknown link types.
inline std::unique_ptr<CaptureReader> open_capture(const std::string& path) {
  return std::make_unique<CaptureReader>(path);
}

}  // namespace nettisa
