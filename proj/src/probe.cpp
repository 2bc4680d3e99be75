#include "cloudrank/probe.hpp"

#include <algorithm>
#include <regex>
#include <thread>

#include <httplib.h>

#include "cloudrank/errors.hpp"
#include "json_util.hpp"

namespace cloudrank {

namespace {

using Clock = std::chrono::steady_clock;

double Milliseconds(Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); }

httplib::Client MakeClient(const std::string& origin, const ProbeOptions& options) {
  httplib::Client client(origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  client.set_keep_alive(true);
  client.set_tcp_nodelay(true);
  return client;
}

[[noreturn]] void ThrowTransport(httplib::Error error, const std::string& what) {
  const std::string message = what + ": " + httplib::to_string(error);
  switch (error) {
    case httplib::Error::Read:
    case httplib::Error::Write:
    case httplib::Error::ConnectionTimeout:
      throw ProbeError(ProbeError::Kind::kTimeout, message);
    case httplib::Error::Connection:
      throw ProbeError(ProbeError::Kind::kUnreachable, message);
    default:
      throw ProbeError(ProbeError::Kind::kMalformed, message);
  }
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

SplitUrl ParseUrl(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[A-Za-z0-9.\-]+(:[0-9]{1,5})?)(/[^\s]*)?$)");
  std::smatch match;
  if (!std::regex_match(url, match, kUrl)) {
    throw ValidationError("url", "malformed URL '" + url + "'");
  }
  return {match[1].str(), match[3].matched ? match[3].str() : "/"};
}

std::vector<ProbeEndpoint> ParseEndpoints(std::string_view document) {
  detail::Json root;
  try {
    root = detail::Json::parse(document);
  } catch (const detail::Json::parse_error& e) {
    throw ValidationError("endpoints", std::string("malformed JSON: ") + e.what());
  }
  if (root.is_object() && root.contains("endpoints")) {
    root = root.at("endpoints");
  }
  if (!root.is_array()) {
    throw ValidationError("endpoints", "expected an array");
  }
  std::vector<ProbeEndpoint> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const std::string where = "endpoints[" + std::to_string(i) + "]";
    const detail::Json& r = root[i];
    ProbeEndpoint e;
    e.provider = detail::RequireString(r, "provider", where);
    e.datacenter_location = detail::RequireString(r, "datacenter_location", where);
    const auto kind = ParseServiceKind(detail::RequireString(r, "service_kind", where));
    if (!kind) {
      throw ValidationError(where, "service_kind must be compute or storage");
    }
    e.service_kind = *kind;
    e.probe_url = detail::RequireString(r, "probe_url", where);
    e.upload_url = detail::RequireString(r, "upload_url", where);
    const detail::Json& bytes = detail::Require(r, "test_object_bytes", where);
    if (!bytes.is_number_integer() || bytes.get<std::int64_t>() <= 0) {
      throw ValidationError(where, "test_object_bytes must be a positive integer");
    }
    e.test_object_bytes = bytes.get<std::int64_t>();
    try {
      ParseUrl(e.probe_url);
      ParseUrl(e.upload_url);
    } catch (const ValidationError& err) {
      throw ValidationError(where, err.what());
    }
    out.push_back(std::move(e));
  }
  return out;
}

QosSample ProbeOnce(const ProbeEndpoint& endpoint, const std::string& client_location, int repetitions,
                    const ProbeOptions& options) {
  if (repetitions < 1) {
    throw std::invalid_argument("repetitions must be at least 1");
  }
  const SplitUrl probe = ParseUrl(endpoint.probe_url);
  const SplitUrl upload = ParseUrl(endpoint.upload_url);
  httplib::Client client = MakeClient(probe.origin, options);

  // Warm the connection so round trips exclude the TCP handshake.
  if (auto res = client.Head(probe.path); !res) {
    ThrowTransport(res.error(), "probe " + endpoint.probe_url);
  }

  std::vector<double> round_trips;
  for (int i = 0; i < repetitions; ++i) {
    const auto start = Clock::now();
    auto res = client.Head(probe.path);
    const auto stop = Clock::now();
    if (!res) {
      ThrowTransport(res.error(), "latency probe " + endpoint.probe_url);
    }
    if (res->status / 100 != 2) {
      throw ProbeError(ProbeError::Kind::kMalformed, "latency probe returned HTTP " + std::to_string(res->status));
    }
    round_trips.push_back(Milliseconds(stop - start));
  }
  const double latency_ms = Median(round_trips);

  std::int64_t received = 0;
  std::optional<Clock::time_point> first_byte;
  auto download = client.Get(probe.path, [&](const char*, std::size_t length) {
    if (!first_byte) {
      first_byte = Clock::now();
    }
    received += static_cast<std::int64_t>(length);
    return true;
  });
  const auto download_end = Clock::now();
  if (!download) {
    ThrowTransport(download.error(), "download " + endpoint.probe_url);
  }
  if (download->status / 100 != 2 || received != endpoint.test_object_bytes || !first_byte) {
    throw ProbeError(ProbeError::Kind::kMalformed, "download returned HTTP " + std::to_string(download->status) +
                                                       " with " + std::to_string(received) + " bytes, expected " +
                                                       std::to_string(endpoint.test_object_bytes));
  }
  const double download_ms = std::max(Milliseconds(download_end - *first_byte), 1e-3);

  httplib::Client upload_client = MakeClient(upload.origin, options);
  const std::string payload(static_cast<std::size_t>(endpoint.test_object_bytes), '\0');
  const auto upload_start = Clock::now();
  auto uploaded = upload_client.Post(upload.path, payload, "application/octet-stream");
  const auto upload_end = Clock::now();
  if (!uploaded) {
    ThrowTransport(uploaded.error(), "upload " + endpoint.upload_url);
  }
  if (uploaded->status / 100 != 2) {
    throw ProbeError(ProbeError::Kind::kMalformed, "upload returned HTTP " + std::to_string(uploaded->status));
  }
  const double upload_ms = std::max(Milliseconds(upload_end - upload_start) - latency_ms, 1e-3);

  const double bits = static_cast<double>(endpoint.test_object_bytes) * 8.0;
  QosSample sample;
  sample.key = {endpoint.provider, endpoint.datacenter_location, endpoint.service_kind, client_location};
  sample.timestamp = NowUtcSeconds();
  sample.latency_ms = std::max(latency_ms, 1e-3);
  sample.download_mbps = bits / (download_ms / 1000.0) / 1e6;
  sample.upload_mbps = bits / (upload_ms / 1000.0) / 1e6;
  ValidateSample(sample);
  return sample;
}

ProbeAgent::ProbeAgent(std::vector<ProbeEndpoint> endpoints, std::string client_location, int repetitions,
                       ProbeOptions options)
    : endpoints_(std::move(endpoints)),
      client_location_(std::move(client_location)),
      repetitions_(repetitions),
      options_(options) {}

ProbeRoundReport ProbeAgent::RunRound() {
  std::vector<std::optional<QosSample>> results(endpoints_.size());
  std::vector<std::string> errors(endpoints_.size());
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < endpoints_.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          results[i] = ProbeOnce(endpoints_[i], client_location_, repetitions_, options_);
        } catch (const std::exception& e) {
          errors[i] = endpoints_[i].provider + "/" + endpoints_[i].datacenter_location + ": " + e.what();
        }
      });
    }
  }
  ProbeRoundReport report;
  std::vector<QosSample> batch;
  for (std::size_t i = 0; i < endpoints_.size(); ++i) {
    if (results[i]) {
      batch.push_back(*results[i]);
    } else {
      report.failures.push_back(errors[i]);
    }
  }
  store_.Merge(batch);
  report.samples = batch.size();
  return report;
}

struct AgentExportServer::Impl {
  Impl(const SampleStore& s, std::string t) : store(s), token(std::move(t)) {}

  const SampleStore& store;
  std::string token;
  httplib::Server server;
  std::thread thread;
};

AgentExportServer::AgentExportServer(const SampleStore& store, std::string token)
    : impl_(std::make_unique<Impl>(store, std::move(token))) {
  impl_->server.Get("/export", [this](const httplib::Request& req, httplib::Response& res) {
    if (req.get_header_value("Authorization") != "Bearer " + impl_->token) {
      res.status = 401;
      res.set_content(R"({"error":"unauthorized"})", "application/json");
      return;
    }
    std::int64_t since = 0;
    if (req.has_param("since")) {
      try {
        since = std::stoll(req.get_param_value("since"));
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(R"({"error":"since must be an integer"})", "application/json");
        return;
      }
    }
    res.set_content(impl_->store.ExportCsv(since), "text/csv");
  });
}

AgentExportServer::~AgentExportServer() { Stop(); }

int AgentExportServer::Start(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw IoError("cannot bind agent export server to " + host + ":" + std::to_string(port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void AgentExportServer::Stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

std::string PullAgentExport(const std::string& agent_url, const std::string& token, std::int64_t since,
                            const ProbeOptions& options) {
  const SplitUrl url = ParseUrl(agent_url);
  httplib::Client client = MakeClient(url.origin, options);
  std::string base = url.path == "/" ? "" : url.path;
  if (!base.empty() && base.back() == '/') {
    base.pop_back();
  }
  const httplib::Headers headers{{"Authorization", "Bearer " + token}};
  auto res = client.Get(base + "/export?since=" + std::to_string(since), headers);
  if (!res) {
    throw IoError("pull from " + agent_url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw IoError("pull from " + agent_url + " returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

MergeReport PullAndMerge(SampleStore& master, const std::string& agent_url, const std::string& token,
                         std::int64_t since, const ProbeOptions& options) {
  return master.MergeCsv(PullAgentExport(agent_url, token, since, options));
}

std::int64_t NowUtcSeconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace cloudrank
