#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cloudrank/config.hpp"
#include "cloudrank/errors.hpp"
#include "cloudrank/json_io.hpp"
#include "cloudrank/probe.hpp"
#include "cloudrank/ranking.hpp"
#include "cloudrank/service.hpp"

namespace fs = std::filesystem;
using namespace cloudrank;
using json_io::Json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitIo = 4;

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

void InstallSignalHandlers() {
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
}

// Sleeps in short steps so a signal ends the wait promptly. Returns false when interrupted.
bool SleepFor(std::chrono::milliseconds total) {
  const auto deadline = std::chrono::steady_clock::now() + total;
  while (!g_stop) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      return true;
    }
    std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(deadline - now,
                                                                              std::chrono::milliseconds(100)));
  }
  return false;
}

int Fail(int code, const std::string& kind, const std::string& message, const std::string& where = "") {
  Json line{{"error", kind}, {"message", message}};
  if (!where.empty()) {
    line["where"] = where;
  }
  std::cerr << line.dump() << '\n';
  return code;
}

void Warn(const std::string& message) { std::cerr << Json{{"warning", message}}.dump() << '\n'; }

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read '" + path + "'");
  }
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Write to a temporary sibling first so readers never see a half-written file.
void WriteFileAtomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content) || !out.flush()) {
      throw IoError("cannot write '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot replace '" + path.string() + "': " + ec.message());
  }
}

struct DataDir {
  fs::path root;

  fs::path catalog() const { return root / "catalog.json"; }
  fs::path catalog_version() const { return root / "catalog.version"; }
  fs::path samples() const { return root / "qos_samples.csv"; }

  std::uint64_t Version() const {
    if (!fs::exists(catalog_version())) {
      return 0;
    }
    try {
      return std::stoull(ReadFile(catalog_version().string()));
    } catch (const std::logic_error&) {
      throw IoError("corrupt version file '" + catalog_version().string() + "'");
    }
  }

  // nullopt when no catalog has been ingested yet.
  std::optional<Catalog> LoadCatalog() const {
    if (!fs::exists(catalog())) {
      return std::nullopt;
    }
    Catalog c = ParseCatalog(ReadFile(catalog().string()));
    c.version = Version();
    return c;
  }

  void LoadSamples(SampleStore& store) const {
    if (!fs::exists(samples())) {
      return;
    }
    const MergeReport report = store.MergeCsv(ReadFile(samples().string()));
    if (!report.errors.empty()) {
      throw IoError("stored samples '" + samples().string() + "' line " + std::to_string(report.errors[0].line) +
                    ": " + report.errors[0].message);
    }
  }
};

struct GlobalOptions {
  std::string config_path;
  std::string data_dir;
};

Config ResolveConfig(const GlobalOptions& global) {
  Config config = global.config_path.empty() ? Config{} : LoadConfig(global.config_path);
  ApplyEnvironment(config);
  if (!global.data_dir.empty()) {
    config.data_dir = global.data_dir;
  }
  return config;
}

std::string Label(const OfferKey& key) {
  return key.service_name.empty() ? key.provider + "/" + key.location
                                  : key.provider + "/" + key.location + "/" + key.service_name;
}

void PrintTable(std::ostream& out, std::span<const ScoredCombination> rows, const std::string& currency) {
  out << std::left << std::setw(5) << "rank" << std::setw(32) << "compute" << std::setw(32) << "storage"
      << std::setw(20) << "network" << std::right << std::setw(14) << ("total_" + currency) << std::setw(12)
      << "latency_ms" << std::setw(12) << "down_mbps" << std::setw(12) << "up_mbps" << std::setw(14) << "ratio"
      << '\n';
  for (const ScoredCombination& s : rows) {
    out << std::left << std::setw(5) << s.rank_position << std::setw(32)
        << (s.compute ? Label(s.compute->Key()) : "-") << std::setw(32) << (s.storage ? Label(s.storage->Key()) : "-")
        << std::setw(20) << Label(s.network.Key()) << std::right << std::fixed << std::setprecision(2)
        << std::setw(14) << s.cost.total.ToDouble() << std::setw(12) << s.qos.values.latency_ms << std::setw(12)
        << s.qos.values.download_mbps << std::setw(12) << s.qos.values.upload_mbps << std::setprecision(6)
        << std::setw(14) << s.score.ratio << (s.qos.estimated ? " *" : "") << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

int CmdRank(const GlobalOptions& global, const std::string& request_path, std::size_t top, const std::string& by,
            const std::string& format) {
  const Config config = ResolveConfig(global);
  const DataDir data{config.data_dir};
  const Json body = [&] {
    try {
      return Json::parse(ReadFile(request_path));
    } catch (const Json::parse_error& e) {
      throw ValidationError(request_path, std::string("malformed JSON: ") + e.what());
    }
  }();
  const RankRequest request = json_io::ParseRankRequest(body);
  const std::optional<Catalog> catalog = data.LoadCatalog();
  RankResult result;
  std::uint64_t version = 0;
  std::string currency = "AUD";
  if (!catalog || catalog->OfferCount() == 0) {
    Warn("catalog is empty; no combinations to rank");
    if (catalog) {
      version = catalog->version;
      currency = catalog->display_currency;
    }
  } else {
    SampleStore samples;
    data.LoadSamples(samples);
    result = Rank(request, *catalog, samples.ComputeAverages(), by == "cost" ? RankOrder::kCost : RankOrder::kRatio,
                  {config.workers});
    version = catalog->version;
    currency = catalog->display_currency;
    if (result.solutions.empty()) {
      Warn("no feasible combination for this request");
    }
  }
  if (format == "json") {
    std::cout << json_io::RankResponseJson(request, result, version, 0, top, 0).dump(2) << '\n';
    return 0;
  }
  const std::size_t n = std::min(top, result.solutions.size());
  const std::span<const ScoredCombination> page(result.solutions.data(), n);
  if (format == "csv") {
    std::cout << json_io::RankCsv(page);
  } else {
    PrintTable(std::cout, page, currency);
  }
  return 0;
}

int CmdIngestCatalog(const GlobalOptions& global, const std::string& file) {
  const Config config = ResolveConfig(global);
  const DataDir data{config.data_dir};
  const std::string document = ReadFile(file);
  const Catalog catalog = ParseCatalog(document);
  const std::uint64_t version = data.Version() + 1;
  WriteFileAtomic(data.catalog(), document);
  WriteFileAtomic(data.catalog_version(), std::to_string(version) + "\n");
  std::cout << Json{{"version", version},
                    {"providers", catalog.providers.size()},
                    {"locations", catalog.locations.size()},
                    {"compute", catalog.compute_offers.size()},
                    {"storage", catalog.storage_offers.size()},
                    {"network", catalog.network_offers.size()}}
                   .dump()
            << '\n';
  return 0;
}

int CmdQosImport(const GlobalOptions& global, const std::string& file) {
  const Config config = ResolveConfig(global);
  const DataDir data{config.data_dir};
  SampleStore store;
  data.LoadSamples(store);
  const MergeReport report = store.MergeCsv(ReadFile(file));
  WriteFileAtomic(data.samples(), store.ExportCsv(std::numeric_limits<std::int64_t>::min()));
  Json errors = Json::array();
  for (const CsvRowError& e : report.errors) {
    errors.push_back({{"line", e.line}, {"message", e.message}});
  }
  std::cout << Json{{"inserted", report.inserted}, {"duplicates", report.duplicates}, {"errors", errors}}.dump()
            << '\n';
  if (!report.errors.empty()) {
    return Fail(kExitValidation, "validation",
                std::to_string(report.errors.size()) + " row(s) rejected, first at line " +
                    std::to_string(report.errors[0].line) + ": " + report.errors[0].message,
                file);
  }
  return 0;
}

int CmdQosAverages(const GlobalOptions& global, const std::string& client_location) {
  const Config config = ResolveConfig(global);
  const DataDir data{config.data_dir};
  SampleStore store;
  data.LoadSamples(store);
  std::vector<QosAverage> averages = store.ComputeAverages();
  if (!client_location.empty()) {
    std::erase_if(averages, [&](const QosAverage& a) { return a.key.client_location != client_location; });
  }
  std::cout << json_io::AveragesJson(averages).dump(2) << '\n';
  return 0;
}

struct ProbeArgs {
  std::string endpoints;
  std::string client_location;
  std::string interval = "2h";
  std::string out;
  int iterations = 0;
  int repetitions = 5;
  std::string timeout = "30s";
  int export_port = -1;
  std::string export_host = "127.0.0.1";
  std::string export_token;
};

int CmdProbe(const ProbeArgs& args) {
  const std::chrono::seconds interval = ParseDuration(args.interval);
  const std::chrono::seconds timeout = ParseDuration(args.timeout);
  if (args.repetitions < 1) {
    throw ConfigError("--repetitions must be at least 1");
  }
  ProbeAgent agent(ParseEndpoints(ReadFile(args.endpoints)), args.client_location, args.repetitions,
                   {std::chrono::duration_cast<std::chrono::milliseconds>(timeout)});
  if (fs::exists(args.out)) {
    agent.store().MergeCsv(ReadFile(args.out));
  }
  std::unique_ptr<AgentExportServer> exporter;
  if (args.export_port >= 0) {
    if (args.export_token.empty()) {
      throw ConfigError("--export-token is required with --export-port");
    }
    exporter = std::make_unique<AgentExportServer>(agent.store(), args.export_token);
    const int port = exporter->Start(args.export_host, args.export_port);
    std::cerr << Json{{"info", "export listening"}, {"host", args.export_host}, {"port", port}}.dump() << '\n';
  }
  InstallSignalHandlers();
  for (int round = 1; !g_stop; ++round) {
    const ProbeRoundReport report = agent.RunRound();
    WriteFileAtomic(args.out, agent.store().ExportCsv(std::numeric_limits<std::int64_t>::min()));
    std::cerr << Json{{"round", round}, {"samples", report.samples}, {"failures", report.failures}}.dump() << '\n';
    if (args.iterations > 0 && round >= args.iterations) {
      break;
    }
    if (!SleepFor(interval)) {
      break;
    }
  }
  return 0;
}

int CmdServe(const GlobalOptions& global) {
  const Config config = ResolveConfig(global);
  const DataDir data{config.data_dir};
  Service service({config.admin_token, 100, config.workers, {}});
  if (fs::exists(data.catalog())) {
    service.catalog().Import(ReadFile(data.catalog().string()));
  }
  data.LoadSamples(service.qos());

  HttpServer server(service);
  const int port = server.Start(config.host, config.port);
  std::cerr << Json{{"info", "listening"}, {"host", config.host}, {"port", port}}.dump() << '\n';
  InstallSignalHandlers();

  // Pull from every agent on the probe schedule, starting immediately.
  std::map<std::string, std::int64_t> last_pull;
  while (!g_stop) {
    for (const AgentSource& agent : config.agents) {
      const std::int64_t started = NowUtcSeconds();
      try {
        const MergeReport report = PullAndMerge(service.qos(), agent.url, agent.token, last_pull[agent.name]);
        last_pull[agent.name] = started - 1;
        std::cerr << Json{{"agent", agent.name}, {"inserted", report.inserted}, {"rejected", report.errors.size()}}
                         .dump()
                  << '\n';
      } catch (const std::exception& e) {
        Warn("agent " + agent.name + ": " + e.what());
      }
    }
    if (!config.agents.empty()) {
      WriteFileAtomic(data.samples(), service.qos().ExportCsv(std::numeric_limits<std::int64_t>::min()));
    }
    if (!SleepFor(config.probe_interval)) {
      break;
    }
  }
  server.Stop();
  WriteFileAtomic(data.samples(), service.qos().ExportCsv(std::numeric_limits<std::int64_t>::min()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloudrank: QoS-aware ranking of compute, storage and network offers"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--config", global.config_path, "Key/value config file")->check(CLI::ExistingFile);
  app.add_option("--data-dir", global.data_dir, "Directory holding catalog.json and qos_samples.csv");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API and pull samples from agents");

  ProbeArgs probe_args;
  auto* probe = app.add_subcommand("probe", "Run a probe agent");
  probe->add_option("--endpoints", probe_args.endpoints, "Endpoint list (JSON)")->required();
  probe->add_option("--client-location", probe_args.client_location, "Vantage point id")->required();
  probe->add_option("--interval", probe_args.interval, "Time between rounds, e.g. 2h")->capture_default_str();
  probe->add_option("--out", probe_args.out, "Sample CSV to maintain")->required();
  probe->add_option("--iterations", probe_args.iterations, "Stop after N rounds (0 = until interrupted)");
  probe->add_option("--repetitions", probe_args.repetitions, "Latency round trips per probe")->capture_default_str();
  probe->add_option("--timeout", probe_args.timeout, "Per-request deadline")->capture_default_str();
  probe->add_option("--export-port", probe_args.export_port, "Serve GET /export on this port (0 = any)");
  probe->add_option("--export-host", probe_args.export_host, "Export bind address")->capture_default_str();
  probe->add_option("--export-token", probe_args.export_token, "Bearer token for the export endpoint");

  std::string catalog_file;
  auto* ingest = app.add_subcommand("ingest-catalog", "Validate a catalog document and make it current");
  ingest->add_option("file", catalog_file)->required();

  auto* qos = app.add_subcommand("qos", "QoS sample store")->require_subcommand(1);
  std::string qos_file;
  auto* qos_import = qos->add_subcommand("import", "Merge a sample CSV into the store");
  qos_import->add_option("csv", qos_file)->required();
  std::string client_location;
  auto* qos_averages = qos->add_subcommand("averages", "Print mean QoS per key");
  qos_averages->add_option("--client-location", client_location, "Only this vantage point");

  std::string request_path;
  std::size_t top = 100;
  std::string by = "ratio";
  std::string format = "table";
  auto* rank = app.add_subcommand("rank", "Rank combinations for a request");
  rank->add_option("--request", request_path, "RankRequest JSON")->required();
  rank->add_option("--top", top, "Number of rows")->capture_default_str();
  rank->add_option("--by", by, "Order")->check(CLI::IsMember({"ratio", "cost"}))->capture_default_str();
  rank->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"table", "json", "csv"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Fail(kExitConfig, "usage", e.what());
  }

  try {
    if (*serve) return CmdServe(global);
    if (*probe) return CmdProbe(probe_args);
    if (*ingest) return CmdIngestCatalog(global, catalog_file);
    if (*qos_import) return CmdQosImport(global, qos_file);
    if (*qos_averages) return CmdQosAverages(global, client_location);
    if (*rank) return CmdRank(global, request_path, top, by, format);
  } catch (const ConfigError& e) {
    return Fail(kExitConfig, "config", e.what());
  } catch (const ValidationError& e) {
    return Fail(kExitValidation, "validation", e.what(), e.where());
  } catch (const ProbeError& e) {
    return Fail(kExitIo, "io", e.what());
  } catch (const IoError& e) {
    return Fail(kExitIo, "io", e.what());
  } catch (const fs::filesystem_error& e) {
    return Fail(kExitIo, "io", e.what());
  } catch (const std::exception& e) {
    return Fail(1, "internal", e.what());
  }
  return 0;
}
