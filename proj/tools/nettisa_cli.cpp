// nettisa: flow metering with streamwise time-series features.
//
//   nettisa extract -i in.pcap -o flows.csv --mode nettisa --enhanced
//   nettisa enhance -i flows.csv -o enhanced.csv
//   nettisa stats   -i in.pcap [--labels labels.csv]
//   nettisa bench   -i in.pcap --modes classic,nettisa --repeat 3
//   nettisa synth   stress -o stress.pcap --duration 60 --rate 1000
//
// Exit codes: 0 success, 1 fatal input error, 2 configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "nettisa/nettisa.hpp"

namespace {

using namespace nettisa;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitConfig = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag values; each is applied on top of the config file only when given.
struct Flags {
  std::vector<std::string> inputs;
  std::string output;
  std::string mode;
  double active_timeout = 0;
  double inactive_timeout = 0;
  double forced_flush = 0;
  std::size_t max_entries = 0;
  bool enhanced = false;
  std::string format;
  unsigned threads = 1;
  std::string labels;
  std::string variance;
};

struct FlagOptions {
  CLI::Option* output = nullptr;
  CLI::Option* mode = nullptr;
  CLI::Option* active = nullptr;
  CLI::Option* inactive = nullptr;
  CLI::Option* forced = nullptr;
  CLI::Option* max_entries = nullptr;
  CLI::Option* enhanced = nullptr;
  CLI::Option* format = nullptr;
  CLI::Option* threads = nullptr;
  CLI::Option* labels = nullptr;
  CLI::Option* variance = nullptr;
};

FlagOptions add_table_flags(CLI::App* cmd, Flags& f) {
  FlagOptions o;
  o.active = cmd->add_option("--active-timeout", f.active_timeout, "Active timeout [s] (default 300)");
  o.inactive = cmd->add_option("--inactive-timeout", f.inactive_timeout, "Inactive timeout [s] (default 65)");
  o.forced = cmd->add_option("--forced-flush", f.forced_flush, "Flush the whole cache every N seconds of capture time");
  o.max_entries = cmd->add_option("--max-entries", f.max_entries, "Flow cache capacity (0 = unbounded)");
  o.threads = cmd->add_option("--threads", f.threads, "Worker shards (1 = single-threaded)");
  return o;
}

RunConfig build_config(const Flags& f, const FlagOptions& o) {
  RunConfig cfg;
  if (const char* path = std::getenv("NETTISA_CONFIG"); path && *path) load_config_file(cfg, path);
  cfg.inputs = f.inputs;
  if (o.output && o.output->count()) cfg.output = f.output;
  if (o.mode && o.mode->count()) {
    const auto m = parse_mode(f.mode);
    if (!m) throw ConfigError("unknown mode: " + f.mode);
    cfg.mode = *m;
  }
  if (o.active && o.active->count()) cfg.active_timeout_s = f.active_timeout;
  if (o.inactive && o.inactive->count()) cfg.inactive_timeout_s = f.inactive_timeout;
  if (o.forced && o.forced->count()) {
    if (!(f.forced_flush > 0)) throw ConfigError("forced flush interval must be > 0");
    cfg.forced_flush_interval_s = f.forced_flush;
  }
  if (o.max_entries && o.max_entries->count()) cfg.max_entries = f.max_entries;
  if (o.enhanced && o.enhanced->count()) cfg.enhanced = f.enhanced;
  if (o.format && o.format->count()) {
    const auto fmt = parse_format(f.format);
    if (!fmt) throw ConfigError("unknown format: " + f.format);
    cfg.format = *fmt;
  }
  if (o.threads && o.threads->count()) cfg.threads = f.threads;
  if (o.labels && o.labels->count()) cfg.labels = f.labels;
  if (o.variance && o.variance->count()) {
    const auto v = parse_variance(f.variance);
    if (!v) throw ConfigError("unknown variance mode: " + f.variance);
    cfg.variance = *v;
  }
  cfg.validate();
  return cfg;
}

// Maps input paths to labels. File lines: `input,label`; an `input,label` header is allowed.
std::map<std::string, std::string> load_labels(const std::string& path) {
  std::map<std::string, std::string> labels;
  if (path.empty()) return labels;
  std::ifstream in(path);
  if (!in) throw InputError("cannot read labels file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 2) throw InputError(path + ": expected 'input,label' rows");
    if (cells[0] == "input" && cells[1] == "label") continue;
    labels[cells[0]] = cells[1];
  }
  return labels;
}

std::optional<std::string> label_for(const std::map<std::string, std::string>& labels, const std::string& input) {
  if (labels.empty()) return std::nullopt;
  if (auto it = labels.find(input); it != labels.end()) return it->second;
  const auto base = std::filesystem::path(input).filename().string();
  if (auto it = labels.find(base); it != labels.end()) return it->second;
  throw InputError("no label for input " + input);
}

// Output stream that is either a file or stdout.
class Output {
 public:
  explicit Output(const std::string& path, bool binary = false) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!*file_) throw InputError("cannot create output file: " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    if (file_) {
      file_->close();
      if (!*file_) throw InputError("failed writing output file");
    } else {
      std::cout.flush();
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void print_capture_summary(const CaptureReader& reader) {
  const auto& c = reader.counters();
  std::cerr << reader.path() << ": frames=" << c.frames << " ip_packets=" << c.yielded
            << " skipped=" << c.skipped << " malformed=" << c.malformed << '\n';
  for (const auto& w : reader.warnings()) std::cerr << "warning: " << w << '\n';
}

int cmd_extract(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw ConfigError("extract needs at least one input");
  const auto labels = load_labels(cfg.labels);
  const auto opt = cfg.extract_options();

  Output out(cfg.output, cfg.format == OutputFormat::binary);
  std::unique_ptr<CsvWriter> csv;
  if (cfg.format == OutputFormat::csv)
    csv = std::make_unique<CsvWriter>(out.stream(), csv_schema_for(cfg.mode, cfg.enhanced, !labels.empty()));
  const auto layout = binary_layout_for(cfg.mode);

  std::uint64_t flows = 0, packets = 0, bytes_written = 0, evictions = 0, reorders = 0;
  for (const auto& path : cfg.inputs) {
    CaptureReader reader(path);
    const auto label = label_for(labels, path);
    auto sink = [&](FlowRecord&& r) {
      r.label = label;
      switch (cfg.format) {
        case OutputFormat::csv: csv->write(r); break;
        case OutputFormat::binary: bytes_written += write_binary(r, layout, out.stream()); break;
        case OutputFormat::jsonl: write_jsonl(r, out.stream()); break;
      }
    };
    const auto summary = run_extract_sharded(reader, opt, cfg.threads, sink);
    flows += summary.flows;
    packets += summary.table.packets;
    evictions += summary.table.evictions;
    reorders += summary.table.reorders;
    print_capture_summary(reader);
  }
  out.close();
  std::cerr << "mode=" << to_string(cfg.mode) << " flows=" << flows << " packets=" << packets;
  if (cfg.format == OutputFormat::binary) std::cerr << " bytes_written=" << bytes_written;
  std::cerr << " evictions=" << evictions << " reorders=" << reorders << '\n';
  return kExitOk;
}

int cmd_enhance(const std::string& input, const std::string& output, VarianceMode variance) {
  CsvReader reader(input);
  if (reader.schema().enhanced) throw InputError(input + ": already enhanced");
  if (!reader.schema().nettisa) throw InputError(input + ": no NetTiSA feature columns to enhance");
  CsvSchema schema = reader.schema();
  schema.enhanced = true;
  Output out(output);
  CsvWriter writer(out.stream(), schema);
  std::uint64_t rows = 0;
  while (auto r = reader.next()) {
    r->collector = collector_features(*r->nettisa, r->base, variance);
    writer.write(*r);
    ++rows;
  }
  out.close();
  std::cerr << "enhanced " << rows << " flows\n";
  return kExitOk;
}

struct StatsAccumulator {
  std::vector<std::uint64_t> packet_counts;
  std::vector<std::string> labels;
  bool labeled = false;

  void add(const FlowRecord& r) {
    packet_counts.push_back(r.base.packets());
    labels.push_back(r.label.value_or(""));
    labeled = labeled || r.label.has_value();
  }
};

int cmd_stats(const RunConfig& cfg, const std::string& json_path) {
  if (cfg.inputs.empty()) throw ConfigError("stats needs at least one input");
  const auto labels = load_labels(cfg.labels);
  StatsAccumulator acc;
  for (const auto& path : cfg.inputs) {
    const auto label = label_for(labels, path);
    if (std::filesystem::path(path).extension() == ".csv") {
      CsvReader reader(path);
      while (auto r = reader.next()) {
        if (label) r->label = label;
        acc.add(*r);
      }
    } else {
      CaptureReader reader(path);
      auto opt = cfg.extract_options();
      opt.mode = Mode::classic;
      run_extract(reader, opt, [&](FlowRecord&& r) {
        r.label = label;
        acc.add(r);
      });
      print_capture_summary(reader);
    }
  }

  std::cout << "flows: " << acc.packet_counts.size() << '\n';
  if (acc.packet_counts.empty()) return kExitOk;

  struct Bin {
    const char* name;
    std::uint64_t lo, hi;
    std::uint64_t count = 0;
  };
  std::vector<Bin> bins{{"1", 1, 1},        {"2", 2, 2},          {"3-5", 3, 5},
                        {"6-10", 6, 10},    {"11-30", 11, 30},    {"31-100", 31, 100},
                        {"101-1000", 101, 1000}, {">1000", 1001, UINT64_MAX}};
  for (auto n : acc.packet_counts)
    for (auto& b : bins)
      if (n >= b.lo && n <= b.hi) ++b.count;
  std::cout << "packets per flow histogram:\n";
  for (const auto& b : bins) std::cout << "  " << b.name << ": " << b.count << '\n';

  const auto report = acc.labeled ? splt_coverage(acc.packet_counts, acc.labels) : splt_coverage(acc.packet_counts);
  std::cout << "share of flows longer than " << SpltState::kLength << " packets: " << report.share() << " ("
            << report.total.longer << "/" << report.total.flows << ")\n";
  for (const auto& [label, c] : report.per_label)
    std::cout << "  label " << label << ": " << c.share() << " (" << c.longer << "/" << c.flows << ")\n";

  if (!json_path.empty()) {
    nlohmann::ordered_json j;
    j["flows"] = report.total.flows;
    j["longer_than_splt"] = report.total.longer;
    j["share_longer_than_splt"] = report.share();
    for (const auto& b : bins) j["histogram"][b.name] = b.count;
    for (const auto& [label, c] : report.per_label)
      j["per_label"][label] = {{"flows", c.flows}, {"longer_than_splt", c.longer}, {"share", c.share()}};
    std::ofstream out(json_path);
    if (!out) throw InputError("cannot create report file: " + json_path);
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg, const std::string& modes, unsigned repeats, const std::string& report_path) {
  if (cfg.inputs.empty()) throw ConfigError("bench needs at least one input");
  if (cfg.threads != 1) throw ConfigError("bench runs single-threaded; use --threads 1");
  BenchOptions options;
  options.inputs = cfg.inputs;
  options.repeats = repeats;
  options.extract = cfg.extract_options();
  options.modes.clear();
  std::stringstream ss(modes);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto m = parse_mode(item);
    if (!m) throw ConfigError("unknown mode: " + item);
    options.modes.push_back(*m);
  }
  if (options.modes.empty()) throw ConfigError("no modes to benchmark");
  if (repeats == 0) throw ConfigError("repeat must be >= 1");

  const auto reports = run_bench(options);
  std::cout << bench_report_table(reports);
  const auto json = bench_report_json(reports);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw InputError("cannot create report file: " + report_path);
    out << json.dump(2) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow metering with streamwise time-series (NetTiSA) features"};
  app.require_subcommand(1);

  Flags f;
  FlagOptions extract_opts, stats_opts, bench_opts;

  auto* extract = app.add_subcommand("extract", "Meter captures into flow records");
  extract->add_option("-i,--input", f.inputs, "Input pcap/pcapng files")->required();
  extract_opts = add_table_flags(extract, f);
  extract_opts.output = extract->add_option("-o,--output", f.output, "Output file (default stdout)");
  extract_opts.mode = extract->add_option("--mode", f.mode, "classic | nettisa | splt | oracle");
  extract_opts.enhanced = extract->add_flag("--enhanced", f.enhanced, "Append the collector-side features");
  extract_opts.format = extract->add_option("--format", f.format, "csv | binary | jsonl");
  extract_opts.labels = extract->add_option("--labels", f.labels, "CSV mapping input,label");
  extract_opts.variance = extract->add_option("--variance", f.variance, "standard | sqrt-stdev");

  std::string enhance_in, enhance_out, enhance_variance = "standard";
  auto* enhance_cmd = app.add_subcommand("enhance", "Add collector-side features to a NetTiSA CSV");
  enhance_cmd->add_option("-i,--input", enhance_in, "NetTiSA CSV")->required();
  enhance_cmd->add_option("-o,--output", enhance_out, "Output CSV (default stdout)");
  enhance_cmd->add_option("--variance", enhance_variance, "standard | sqrt-stdev");

  std::string stats_json;
  auto* stats = app.add_subcommand("stats", "Flow-length statistics and SPLT coverage");
  stats->add_option("-i,--input", f.inputs, "Captures or flow CSV files")->required();
  stats_opts = add_table_flags(stats, f);
  stats_opts.labels = stats->add_option("--labels", f.labels, "CSV mapping input,label");
  stats->add_option("--json", stats_json, "Also write the report as JSON");

  std::string bench_modes = "classic,splt,nettisa,oracle", bench_report;
  unsigned bench_repeat = 3;
  auto* bench = app.add_subcommand("bench", "Compare processing time and memory across modes");
  bench->add_option("-i,--input", f.inputs, "Input captures")->required();
  bench_opts = add_table_flags(bench, f);
  bench->add_option("--modes", bench_modes, "Comma-separated modes");
  bench->add_option("--repeat", bench_repeat, "Repetitions per mode (median reported)");
  bench->add_option("--report", bench_report, "JSON report path");

  std::string synth_kind, synth_out, synth_out_b;
  double synth_duration = 60, synth_rate = 1000, synth_interval = 10, synth_end = 600;
  std::uint64_t synth_packets = 1'000'000, synth_seed = 1;
  std::uint32_t synth_flows = 1000, synth_ppf = 100;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic capture");
  synth_cmd->add_option("kind", synth_kind, "stress | periodic | mixed | two-class")
      ->required()
      ->check(CLI::IsMember({"stress", "periodic", "mixed", "two-class"}));
  synth_cmd->add_option("-o,--output", synth_out, "Output pcap")->required();
  synth_cmd->add_option("--output-b", synth_out_b, "Second output (two-class: class B)");
  synth_cmd->add_option("--duration", synth_duration, "stress: seconds of traffic");
  synth_cmd->add_option("--rate", synth_rate, "stress: packets per second");
  synth_cmd->add_option("--interval", synth_interval, "periodic: seconds between packets");
  synth_cmd->add_option("--end", synth_end, "periodic: time of the last packet");
  synth_cmd->add_option("--packets", synth_packets, "mixed: total packets");
  synth_cmd->add_option("--flows", synth_flows, "mixed/two-class: number of flows");
  synth_cmd->add_option("--packets-per-flow", synth_ppf, "two-class: packets per flow");
  synth_cmd->add_option("--seed", synth_seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*extract) return cmd_extract(build_config(f, extract_opts));
    if (*enhance_cmd) {
      const auto v = parse_variance(enhance_variance);
      if (!v) throw ConfigError("unknown variance mode: " + enhance_variance);
      return cmd_enhance(enhance_in, enhance_out, *v);
    }
    if (*stats) return cmd_stats(build_config(f, stats_opts), stats_json);
    if (*bench) return cmd_bench(build_config(f, bench_opts), bench_modes, bench_repeat, bench_report);
    if (*synth_cmd) {
      if (synth_kind == "stress") {
        synth::single_flow_stress(synth_out, synth_duration, synth_rate, synth_seed);
      } else if (synth_kind == "periodic") {
        synth::periodic_flow(synth_out, synth_end, synth_interval);
      } else if (synth_kind == "mixed") {
        if (synth_flows == 0) throw ConfigError("--flows must be >= 1");
        synth::mixed_traffic(synth_out, synth_packets, synth_flows, synth_seed);
      } else {
        if (synth_out_b.empty()) throw ConfigError("two-class needs --output-b");
        synth::two_class_corpus(synth_out, synth_out_b, synth_flows, synth_ppf, synth_seed);
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitConfig;
}
