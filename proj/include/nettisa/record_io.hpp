#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nettisa/pipeline.hpp"

namespace nettisa {

// ---------------------------------------------------------------------------
// Binary records
//
// All multi-byte fields are little-endian. Byte 0 of every record carries the
// format version in the high nibble and the address family (4 or 6) in the low
// nibble. See docs/formats.md for the byte-by-byte layout.
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kBinaryFormatVersion = 1;

inline constexpr std::size_t kKeyBlockSizeV4 = 21;
inline constexpr std::size_t kKeyBlockSizeV6 = 45;
inline constexpr std::size_t kBaseBlockSize = 40;
inline constexpr std::size_t kNetTisaBlockSize = 52;
inline constexpr std::size_t kSpltBlockSize = 1 + SpltState::kLength * 7;
inline constexpr std::size_t kClassicRecordSizeV4 = kKeyBlockSizeV4 + kBaseBlockSize;
inline constexpr std::size_t kNetTisaRecordSizeV4 = kClassicRecordSizeV4 + kNetTisaBlockSize;

static_assert(kNetTisaBlockSize == NetTisaRecord::kFieldCount * sizeof(float));
static_assert(kClassicRecordSizeV4 == 61);
static_assert(kNetTisaRecordSizeV4 == 113);
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

enum class BinaryLayout { classic, nettisa, splt };

inline BinaryLayout binary_layout_for(Mode m) {
  switch (m) {
    case Mode::classic: return BinaryLayout::classic;
    case Mode::splt: return BinaryLayout::splt;
    case Mode::nettisa:
    case Mode::oracle: return BinaryLayout::nettisa;
  }
  return BinaryLayout::classic;
}

inline std::size_t binary_record_size(BinaryLayout layout, AddressFamily family) {
  std::size_t size = (family == AddressFamily::ipv4 ? kKeyBlockSizeV4 : kKeyBlockSizeV6) + kBaseBlockSize;
  if (layout == BinaryLayout::nettisa) size += kNetTisaBlockSize;
  if (layout == BinaryLayout::splt) size += kSpltBlockSize;
  return size;
}

namespace detail {

class ByteBuffer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    le(bits, 4);
  }
  void raw(const std::uint8_t* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  void zeros(std::size_t n) { bytes_.insert(bytes_.end(), n, 0); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

template <class T>
T saturate(std::uint64_t v) {
  return static_cast<T>(std::min<std::uint64_t>(v, std::numeric_limits<T>::max()));
}

inline void put_timestamp(ByteBuffer& b, Micros t) {
  const auto us = t.count();
  b.u32(static_cast<std::uint32_t>(us / 1'000'000));
  b.u32(static_cast<std::uint32_t>(us % 1'000'000));
}

}  // namespace detail

/// Encodes one flow record. Throws std::invalid_argument when the layout needs
/// data the record does not carry.
inline std::vector<std::uint8_t> encode_binary(const FlowRecord& r, BinaryLayout layout) {
  detail::ByteBuffer b;
  const auto [src, dst] = oriented(r.key, r.base);
  const bool v4 = src.ip.is_v4();
  b.u8(static_cast<std::uint8_t>((kBinaryFormatVersion << 4) | (v4 ? 4 : 6)));
  b.raw(src.ip.bytes().data(), src.ip.size());
  b.raw(dst.ip.bytes().data(), dst.ip.size());
  b.u16(src.port);
  b.u16(dst.port);
  b.u8(r.key.protocol);
  b.zeros(7);

  b.u32(detail::saturate<std::uint32_t>(r.base.packets_fwd));
  b.u32(detail::saturate<std::uint32_t>(r.base.packets_rev));
  b.u64(r.base.bytes_fwd);
  b.u64(r.base.bytes_rev);
  detail::put_timestamp(b, r.base.t_first);
  detail::put_timestamp(b, r.base.t_last);

  if (layout == BinaryLayout::nettisa) {
    if (!r.nettisa) throw std::invalid_argument("binary nettisa layout needs NetTiSA features");
    for (auto field : kNetTisaFields) b.f32(static_cast<float>((*r.nettisa).*field));
  } else if (layout == BinaryLayout::splt) {
    if (!r.splt) throw std::invalid_argument("binary splt layout needs an SPLT sequence");
    const auto packets = r.splt->packets();
    b.u8(static_cast<std::uint8_t>(packets.size()));
    for (std::size_t i = 0; i < SpltState::kLength; ++i) {
      if (i < packets.size()) {
        b.u16(detail::saturate<std::uint16_t>(packets[i].payload_len));
        b.u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(packets[i].direction)));
        b.u32(detail::saturate<std::uint32_t>(static_cast<std::uint64_t>(packets[i].dt.count())));
      } else {
        b.zeros(7);
      }
    }
  }
  return b.bytes();
}

/// Appends one record to `out`; returns the number of bytes written.
inline std::size_t write_binary(const FlowRecord& r, BinaryLayout layout, std::ostream& out) {
  const auto bytes = encode_binary(r, layout);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::ios_base::failure("binary record write failed");
  return bytes.size();
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvSchemaTag = "#nettisa-csv-schema=1";

inline constexpr std::array<std::string_view, 11> kCsvBaseColumns{
    "src_ip", "dst_ip", "src_port", "dst_port", "protocol", "time_first", "time_last",
    "packets", "packets_rev", "bytes", "bytes_rev",
};
inline constexpr std::array<std::string_view, 3> kCsvSpltColumns{"splt_lengths", "splt_directions", "splt_times"};

/// Which optional column groups a CSV file carries.
struct CsvSchema {
  bool nettisa = false;
  bool enhanced = false;
  bool splt = false;
  bool label = false;

  std::vector<std::string> columns() const {
    std::vector<std::string> c(kCsvBaseColumns.begin(), kCsvBaseColumns.end());
    if (nettisa) c.insert(c.end(), kNetTisaFieldNames.begin(), kNetTisaFieldNames.end());
    if (enhanced) c.insert(c.end(), kCollectorFieldNames.begin(), kCollectorFieldNames.end());
    if (splt) c.insert(c.end(), kCsvSpltColumns.begin(), kCsvSpltColumns.end());
    if (label) c.emplace_back("label");
    return c;
  }

  /// Classification features: the 4 flow counters plus enabled feature groups.
  std::size_t feature_columns() const {
    return 4 + (nettisa ? NetTisaRecord::kFieldCount : 0) + (enhanced ? CollectorFeatures::kFieldCount : 0);
  }

  friend bool operator==(const CsvSchema&, const CsvSchema&) = default;
};

inline CsvSchema csv_schema_for(Mode mode, bool enhanced, bool label) {
  CsvSchema s;
  s.nettisa = mode == Mode::nettisa || mode == Mode::oracle;
  s.enhanced = enhanced && s.nettisa;
  s.splt = mode == Mode::splt;
  s.label = label;
  return s;
}

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

// Nine significant digits: enough to round-trip any single-precision value.
inline void append_float(std::string& out, double v) {
  char buf[48];
  const int n = std::snprintf(buf, sizeof(buf), "%#.9g", static_cast<double>(static_cast<float>(v)));
  out.append(buf, static_cast<std::size_t>(n));
}

inline void append_time(std::string& out, Micros t) {
  char buf[48];
  const auto us = t.count();
  const int n = std::snprintf(buf, sizeof(buf), "%s%lld.%06lld", us < 0 ? "-" : "",
                              static_cast<long long>(std::llabs(us) / 1'000'000),
                              static_cast<long long>(std::llabs(us) % 1'000'000));
  out.append(buf, static_cast<std::size_t>(n));
}

inline void append_quoted(std::string& out, std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace detail

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, CsvSchema schema) : out_(out), schema_(schema) {
    std::string header(kCsvSchemaTag);
    header.push_back('\n');
    const auto cols = schema_.columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) header.push_back(',');
      header += cols[i];
    }
    header.push_back('\n');
    out_ << header;
    if (!out_) throw std::ios_base::failure("CSV header write failed");
  }

  void write(const FlowRecord& r) {
    line_.clear();
    const auto [src, dst] = oriented(r.key, r.base);
    line_ += src.ip.to_string();
    line_ += ',';
    line_ += dst.ip.to_string();
    line_ += ',' + std::to_string(src.port) + ',' + std::to_string(dst.port) + ',' +
             std::to_string(r.key.protocol) + ',';
    detail::append_time(line_, r.base.t_first);
    line_ += ',';
    detail::append_time(line_, r.base.t_last);
    line_ += ',' + std::to_string(r.base.packets_fwd) + ',' + std::to_string(r.base.packets_rev) + ',' +
             std::to_string(r.base.bytes_fwd) + ',' + std::to_string(r.base.bytes_rev);
    if (schema_.nettisa) {
      if (!r.nettisa) throw std::invalid_argument("CSV schema needs NetTiSA features");
      for (auto field : kNetTisaFields) {
        line_ += ',';
        detail::append_float(line_, (*r.nettisa).*field);
      }
    }
    if (schema_.enhanced) {
      if (!r.collector) throw std::invalid_argument("CSV schema needs collector features");
      for (auto field : kCollectorFields) {
        line_ += ',';
        detail::append_float(line_, (*r.collector).*field);
      }
    }
    if (schema_.splt) {
      if (!r.splt) throw std::invalid_argument("CSV schema needs an SPLT sequence");
      const auto packets = r.splt->packets();
      std::string lengths, dirs, times;
      for (std::size_t i = 0; i < packets.size(); ++i) {
        if (i) {
          lengths += '|';
          dirs += '|';
          times += '|';
        }
        lengths += std::to_string(packets[i].payload_len);
        dirs += std::to_string(static_cast<int>(packets[i].direction));
        detail::append_time(times, packets[i].dt);
      }
      line_ += ',' + lengths + ',' + dirs + ',' + times;
    }
    if (schema_.label) {
      line_ += ',';
      detail::append_quoted(line_, r.label.value_or(""));
    }
    line_ += '\n';
    out_ << line_;
    if (!out_) throw std::ios_base::failure("CSV write failed");
  }

  const CsvSchema& schema() const { return schema_; }

 private:
  std::ostream& out_;
  CsvSchema schema_;
  std::string line_;
};

/// Streaming reader for files produced by CsvWriter (or following its schema).
class CsvReader {
 public:
  explicit CsvReader(const std::string& path) : owned_(std::make_unique<std::ifstream>(path)), in_(*owned_) {
    if (!*owned_) throw std::runtime_error("cannot open CSV file: " + path);
    read_header();
  }
  explicit CsvReader(std::istream& in) : in_(in) { read_header(); }

  const CsvSchema& schema() const { return schema_; }

  std::optional<FlowRecord> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return parse_row(line);
    }
    return std::nullopt;
  }

 private:
  void read_header() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.front() == '#') {
        if (line.rfind("#nettisa-csv-schema=", 0) == 0 && line != kCsvSchemaTag)
          throw CsvError(line_no_, "unsupported schema version " + line.substr(20));
        continue;
      }
      break;
    }
    if (line.empty()) throw CsvError(line_no_, "missing header row");
    const auto cols = detail::split_csv_line(line);

    std::size_t i = 0;
    auto expect_group = [&](auto const& names) {
      for (auto name : names) {
        if (i >= cols.size()) throw CsvError(line_no_, "missing column '" + std::string(name) + "'");
        if (cols[i] != name)
          throw CsvError(line_no_, "unexpected column '" + cols[i] + "', expected '" + std::string(name) + "'");
        ++i;
      }
    };
    expect_group(kCsvBaseColumns);
    if (i < cols.size() && cols[i] == kNetTisaFieldNames[0]) {
      expect_group(kNetTisaFieldNames);
      schema_.nettisa = true;
    }
    if (i < cols.size() && cols[i] == kCollectorFieldNames[0]) {
      if (!schema_.nettisa) throw CsvError(line_no_, "column '" + cols[i] + "' requires the NetTiSA columns");
      expect_group(kCollectorFieldNames);
      schema_.enhanced = true;
    }
    if (i < cols.size() && cols[i] == kCsvSpltColumns[0]) {
      expect_group(kCsvSpltColumns);
      schema_.splt = true;
    }
    if (i < cols.size() && cols[i] == "label") {
      schema_.label = true;
      ++i;
    }
    if (i < cols.size()) throw CsvError(line_no_, "unexpected column '" + cols[i] + "'");
    columns_ = cols.size();
  }

  template <class T>
  T parse_int(const std::string& s, std::string_view column) const {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw CsvError(line_no_, "bad value '" + s + "' in column '" + std::string(column) + "'");
    return v;
  }

  // Feature columns carry single-precision values; parsing as float restores them bit-exactly.
  double parse_feature(const std::string& s, std::string_view column) const {
    float v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v))
      throw CsvError(line_no_, "bad value '" + s + "' in column '" + std::string(column) + "'");
    return v;
  }

  Micros parse_time(const std::string& s, std::string_view column) const {
    const auto dot = s.find('.');
    const std::string whole = s.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
    if (frac.size() > 6) throw CsvError(line_no_, "bad value '" + s + "' in column '" + std::string(column) + "'");
    frac.resize(6, '0');
    const bool negative = !whole.empty() && whole.front() == '-';
    const auto sec = parse_int<std::int64_t>(negative ? whole.substr(1) : whole, column);
    const auto us = parse_int<std::int64_t>(frac, column);
    const auto total = sec * 1'000'000 + us;
    return Micros{negative ? -total : total};
  }

  FlowRecord parse_row(const std::string& line) const {
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != columns_)
      throw CsvError(line_no_, "expected " + std::to_string(columns_) + " fields, found " + std::to_string(cells.size()));
    FlowRecord r;
    const auto src_ip = IpAddress::parse(cells[0]);
    const auto dst_ip = IpAddress::parse(cells[1]);
    if (!src_ip) throw CsvError(line_no_, "bad value '" + cells[0] + "' in column 'src_ip'");
    if (!dst_ip) throw CsvError(line_no_, "bad value '" + cells[1] + "' in column 'dst_ip'");
    PacketRecord probe;
    probe.src_ip = *src_ip;
    probe.dst_ip = *dst_ip;
    probe.src_port = parse_int<std::uint16_t>(cells[2], "src_port");
    probe.dst_port = parse_int<std::uint16_t>(cells[3], "dst_port");
    probe.protocol = parse_int<std::uint8_t>(cells[4], "protocol");
    r.key = FlowKey::from_packet(probe);
    r.base.initiator_is_a = (Endpoint{probe.src_ip, probe.src_port} == r.key.a);
    r.base.t_first = parse_time(cells[5], "time_first");
    r.base.t_last = parse_time(cells[6], "time_last");
    r.base.packets_fwd = parse_int<std::uint64_t>(cells[7], "packets");
    r.base.packets_rev = parse_int<std::uint64_t>(cells[8], "packets_rev");
    r.base.bytes_fwd = parse_int<std::uint64_t>(cells[9], "bytes");
    r.base.bytes_rev = parse_int<std::uint64_t>(cells[10], "bytes_rev");
    std::size_t i = kCsvBaseColumns.size();
    if (schema_.nettisa) {
      NetTisaRecord n;
      for (std::size_t f = 0; f < NetTisaRecord::kFieldCount; ++f, ++i)
        n.*kNetTisaFields[f] = parse_feature(cells[i], kNetTisaFieldNames[f]);
      r.nettisa = n;
    }
    if (schema_.enhanced) {
      CollectorFeatures c;
      for (std::size_t f = 0; f < CollectorFeatures::kFieldCount; ++f, ++i)
        c.*kCollectorFields[f] = parse_feature(cells[i], kCollectorFieldNames[f]);
      r.collector = c;
    }
    if (schema_.splt) {
      auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        if (s.empty()) return parts;
        std::size_t start = 0;
        for (;;) {
          const auto bar = s.find('|', start);
          parts.push_back(s.substr(start, bar - start));
          if (bar == std::string::npos) break;
          start = bar + 1;
        }
        return parts;
      };
      const auto lengths = split(cells[i]);
      const auto dirs = split(cells[i + 1]);
      const auto times = split(cells[i + 2]);
      if (lengths.size() != dirs.size() || lengths.size() != times.size() || lengths.size() > SpltState::kLength)
        throw CsvError(line_no_, "inconsistent SPLT columns");
      SpltState s;
      for (std::size_t k = 0; k < lengths.size(); ++k) {
        const int d = parse_int<int>(dirs[k], "splt_directions");
        if (d != 1 && d != -1) throw CsvError(line_no_, "bad value '" + dirs[k] + "' in column 'splt_directions'");
        s.push_unchecked({parse_int<std::uint32_t>(lengths[k], "splt_lengths"),
                          static_cast<Direction>(d), parse_time(times[k], "splt_times")});
      }
      r.splt = std::move(s);
      i += 3;
    }
    if (schema_.label) r.label = cells[i];
    return r;
  }

  std::unique_ptr<std::ifstream> owned_;
  std::istream& in_;
  CsvSchema schema_;
  std::size_t columns_ = 0;
  std::size_t line_no_ = 0;
};

inline std::vector<FlowRecord> read_csv(const std::string& path) {
  CsvReader reader(path);
  std::vector<FlowRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// JSON lines
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const FlowRecord& r) {
  nlohmann::ordered_json j;
  const auto [src, dst] = oriented(r.key, r.base);
  j["src_ip"] = src.ip.to_string();
  j["dst_ip"] = dst.ip.to_string();
  j["src_port"] = src.port;
  j["dst_port"] = dst.port;
  j["protocol"] = r.key.protocol;
  j["time_first"] = to_seconds(r.base.t_first);
  j["time_last"] = to_seconds(r.base.t_last);
  j["packets"] = r.base.packets_fwd;
  j["packets_rev"] = r.base.packets_rev;
  j["bytes"] = r.base.bytes_fwd;
  j["bytes_rev"] = r.base.bytes_rev;
  j["export_reason"] = to_string(r.reason);
  if (r.nettisa)
    for (std::size_t f = 0; f < NetTisaRecord::kFieldCount; ++f)
      j[std::string(kNetTisaFieldNames[f])] = static_cast<float>((*r.nettisa).*kNetTisaFields[f]);
  if (r.collector)
    for (std::size_t f = 0; f < CollectorFeatures::kFieldCount; ++f)
      j[std::string(kCollectorFieldNames[f])] = static_cast<float>((*r.collector).*kCollectorFields[f]);
  if (r.splt) {
    auto& s = j["splt"];
    s = nlohmann::ordered_json::array();
    for (const auto& p : r.splt->packets())
      s.push_back({p.payload_len, static_cast<int>(p.direction), to_seconds(p.dt)});
  }
  if (r.analysis) {
    auto& a = j["series_analysis"];
    a["median"] = r.analysis->median;
    a["iqr"] = r.analysis->iqr;
    a["autocorrelation"] = r.analysis->autocorrelation;
    a["peak_frequency"] = r.analysis->peak_frequency;
    a["peak_power"] = r.analysis->peak_power;
  }
  if (r.label) j["label"] = *r.label;
  return j;
}

inline void write_jsonl(const FlowRecord& r, std::ostream& out) {
  out << to_json(r).dump() << '\n';
  if (!out) throw std::ios_base::failure("JSON write failed");
}

}  // namespace nettisa
