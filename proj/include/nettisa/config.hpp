#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nettisa/pipeline.hpp"

namespace nettisa {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { csv, binary, jsonl };

inline std::optional<OutputFormat> parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "binary") return OutputFormat::binary;
  if (s == "jsonl") return OutputFormat::jsonl;
  return std::nullopt;
}

inline std::optional<VarianceMode> parse_variance(std::string_view s) {
  if (s == "standard") return VarianceMode::standard;
  if (s == "sqrt-stdev") return VarianceMode::sqrt_stdev;
  return std::nullopt;
}

struct RunConfig {
  std::vector<std::string> inputs;
  std::string output;
  Mode mode = Mode::nettisa;
  double active_timeout_s = 300;
  double inactive_timeout_s = 65;
  std::size_t max_entries = 1u << 22;
  std::optional<double> forced_flush_interval_s;
  bool enhanced = false;
  OutputFormat format = OutputFormat::csv;
  unsigned threads = 1;
  VarianceMode variance = VarianceMode::standard;
  std::string labels;

  void validate() const {
    if (!(active_timeout_s > 0)) throw ConfigError("active timeout must be > 0");
    if (!(inactive_timeout_s > 0)) throw ConfigError("inactive timeout must be > 0");
    if (forced_flush_interval_s && !(*forced_flush_interval_s > 0))
      throw ConfigError("forced flush interval must be > 0");
    if (threads == 0) throw ConfigError("threads must be >= 1");
    if (forced_flush_interval_s && threads > 1) throw ConfigError("forced flush needs --threads 1");
  }

  ExtractOptions extract_options() const {
    ExtractOptions o;
    o.mode = mode;
    o.table.active_timeout = from_seconds(active_timeout_s);
    o.table.inactive_timeout = from_seconds(inactive_timeout_s);
    o.table.max_entries = max_entries;
    if (forced_flush_interval_s) o.table.forced_flush_interval = from_seconds(*forced_flush_interval_s);
    o.enhanced = enhanced;
    o.variance = variance;
    return o;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  double d{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("bad number for " + key + ": " + v);
  return d;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": " + v);
}

}  // namespace detail

/// Parses `key = value` lines; '#' starts a comment. Returns the pairs in file order.
inline std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(no) + ": expected key=value");
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

/// Applies config-file settings onto `cfg`. Unknown keys are errors.
inline void apply_key_values(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "active_timeout_s") {
      cfg.active_timeout_s = detail::to_double(key, value);
    } else if (key == "inactive_timeout_s") {
      cfg.inactive_timeout_s = detail::to_double(key, value);
    } else if (key == "max_entries") {
      cfg.max_entries = static_cast<std::size_t>(detail::to_double(key, value));
    } else if (key == "forced_flush_interval_s") {
      const double v = detail::to_double(key, value);
      cfg.forced_flush_interval_s = v > 0 ? std::optional<double>(v) : std::nullopt;
    } else if (key == "mode") {
      const auto m = parse_mode(value);
      if (!m) throw ConfigError("unknown mode: " + value);
      cfg.mode = *m;
    } else if (key == "format") {
      const auto f = parse_format(value);
      if (!f) throw ConfigError("unknown format: " + value);
      cfg.format = *f;
    } else if (key == "enhanced") {
      cfg.enhanced = detail::to_bool(key, value);
    } else if (key == "threads") {
      cfg.threads = static_cast<unsigned>(detail::to_double(key, value));
    } else if (key == "variance") {
      const auto v = parse_variance(value);
      if (!v) throw ConfigError("unknown variance mode: " + value);
      cfg.variance = *v;
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "labels") {
      cfg.labels = value;
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  apply_key_values(cfg, parse_key_values(in, path));
}

}  // namespace nettisa
