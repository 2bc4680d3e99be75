#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cloudrank/qos.hpp"

namespace cloudrank {

// A datacenter test target: a downloadable object of known size and a URL that accepts uploads.
struct ProbeEndpoint {
  std::string provider;
  std::string datacenter_location;
  ServiceKind service_kind = ServiceKind::kCompute;
  std::string probe_url;
  std::string upload_url;
  std::int64_t test_object_bytes = 0;
};

// Parses a JSON array of endpoints. Throws ValidationError on malformed URLs or nonpositive sizes.
std::vector<ProbeEndpoint> ParseEndpoints(std::string_view document);

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

// Only http:// and https:// URLs with a host are accepted.
SplitUrl ParseUrl(const std::string& url);

class ProbeError : public std::runtime_error {
 public:
  enum class Kind { kTimeout, kUnreachable, kMalformed };

  ProbeError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct ProbeOptions {
  std::chrono::milliseconds timeout{30'000};  // per request
};

/*
 * Measures one endpoint from the current vantage point:
 *   latency  = median round trip of `repetitions` HEAD requests on the probe URL,
 *   download = test_object_bytes * 8 / transfer time / 1e6, timed from the first body byte to the last,
 *   upload   = test_object_bytes * 8 / (POST time - median latency) / 1e6.
 * Throws ProbeError on timeout, connection failure, non-2xx status or a body of the wrong size; nothing is emitted.
 */
QosSample ProbeOnce(const ProbeEndpoint& endpoint, const std::string& client_location, int repetitions,
                    const ProbeOptions& options = {});

struct ProbeRoundReport {
  std::size_t samples = 0;
  std::vector<std::string> failures;
};

// A vantage-point agent: probes every endpoint (endpoints in parallel, one probe at a time per endpoint) and keeps
// the results in a local store that the master pulls from.
class ProbeAgent {
 public:
  ProbeAgent(std::vector<ProbeEndpoint> endpoints, std::string client_location, int repetitions = 5,
             ProbeOptions options = {});

  ProbeRoundReport RunRound();

  SampleStore& store() { return store_; }
  const SampleStore& store() const { return store_; }

 private:
  std::vector<ProbeEndpoint> endpoints_;
  std::string client_location_;
  int repetitions_;
  ProbeOptions options_;
  SampleStore store_;
};

// Serves GET /export?since=<unix-seconds> from a sample store, guarded by a bearer token.
class AgentExportServer {
 public:
  AgentExportServer(const SampleStore& store, std::string token);
  ~AgentExportServer();
  AgentExportServer(const AgentExportServer&) = delete;
  AgentExportServer& operator=(const AgentExportServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port; returns the bound port.
  int Start(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Pulls an agent's export over HTTP. Throws IoError on transport failure or a non-200 status.
std::string PullAgentExport(const std::string& agent_url, const std::string& token, std::int64_t since,
                            const ProbeOptions& options = {});

// Pull-then-merge into the master store.
MergeReport PullAndMerge(SampleStore& master, const std::string& agent_url, const std::string& token,
                         std::int64_t since, const ProbeOptions& options = {});

std::int64_t NowUtcSeconds();

}  // namespace cloudrank
