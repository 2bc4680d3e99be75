#include "cloudrank/service.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include <httplib.h>

#include "cloudrank/errors.hpp"
#include "cloudrank/json_io.hpp"
#include "cloudrank/probe.hpp"
#include "cloudrank/ranking.hpp"

namespace cloudrank {

namespace {

using json_io::Json;

ApiResponse JsonResponse(int status, const Json& body) { return {status, "application/json", body.dump()}; }

ApiResponse Error(int status, const std::string& message, const std::string& field = "") {
  Json body{{"error", message}};
  if (!field.empty()) {
    body["field"] = field;
  }
  return JsonResponse(status, body);
}

std::string Header(const ApiRequest& request, const std::string& name) {
  const auto it = request.headers.find(name);
  return it == request.headers.end() ? "" : it->second;
}

bool ContentTypeIs(const ApiRequest& request, const std::string& type) {
  const std::string value = Header(request, "content-type");
  return value.compare(0, type.size(), type) == 0;
}

std::optional<std::size_t> SizeParam(const ApiRequest& request, const std::string& name) {
  const auto it = request.query.find(name);
  if (it == request.query.end()) {
    return std::nullopt;
  }
  if (it->second.empty() || !std::all_of(it->second.begin(), it->second.end(), ::isdigit)) {
    throw ValidationError(name, "must be a nonnegative integer");
  }
  return static_cast<std::size_t>(std::stoull(it->second));
}

Json ParseBody(const ApiRequest& request) {
  try {
    return Json::parse(request.body);
  } catch (const Json::parse_error& e) {
    throw ValidationError("body", std::string("malformed JSON: ") + e.what());
  }
}

Json ErrorsJson(const std::vector<CsvRowError>& errors) {
  Json out = Json::array();
  for (const CsvRowError& e : errors) {
    out.push_back({{"line", e.line}, {"message", e.message}});
  }
  return out;
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.clock) {
    config_.clock = NowUtcSeconds;
  }
}

bool Service::Authorized(const ApiRequest& request) const {
  return !config_.admin_token.empty() && Header(request, "authorization") == "Bearer " + config_.admin_token;
}

ApiResponse Service::Handle(const ApiRequest& request) {
  struct Route {
    const char* method;
    const char* path;
    ApiResponse (Service::*handler)(const ApiRequest&);
  };
  static constexpr Route kRoutes[] = {
      {"POST", "/api/rank", &Service::Rank},
      {"POST", "/api/weights", &Service::Weights},
      {"POST", "/api/catalog/import", &Service::ImportCatalog},
      {"POST", "/api/qos/import", &Service::ImportQos},
      {"GET", "/api/qos/averages", &Service::Averages},
      {"GET", "/api/catalog/offers", &Service::Offers},
  };
  bool path_known = false;
  for (const Route& route : kRoutes) {
    if (request.path != route.path) {
      continue;
    }
    path_known = true;
    if (request.method != route.method) {
      continue;
    }
    try {
      return (this->*route.handler)(request);
    } catch (const ValidationError& e) {
      return Error(400, e.what(), e.where());
    } catch (const std::exception& e) {
      return Error(500, e.what());
    }
  }
  return path_known ? Error(405, "method not allowed") : Error(404, "no such route");
}

ApiResponse Service::Rank(const ApiRequest& request) {
  if (!ContentTypeIs(request, "application/json")) {
    return Error(415, "expected application/json");
  }
  const std::string by = request.query.contains("by") ? request.query.at("by") : "ratio";
  if (by != "ratio" && by != "cost") {
    return Error(400, "by must be ratio or cost", "by");
  }
  const std::size_t limit = SizeParam(request, "limit").value_or(config_.default_limit);
  const std::size_t offset = SizeParam(request, "offset").value_or(0);
  const RankRequest rank_request = json_io::ParseRankRequest(ParseBody(request));
  const auto snapshot = catalog_.Snapshot();
  if (!snapshot) {
    return Error(409, "no catalog loaded");
  }
  const std::vector<QosAverage> averages = qos_.ComputeAverages();
  const RankResult result = cloudrank::Rank(rank_request, *snapshot, averages,
                                            by == "cost" ? RankOrder::kCost : RankOrder::kRatio,
                                            {config_.workers});
  return JsonResponse(
      200, json_io::RankResponseJson(rank_request, result, snapshot->version, offset, limit, config_.clock()));
}

ApiResponse Service::Weights(const ApiRequest& request) {
  if (!ContentTypeIs(request, "application/json")) {
    return Error(415, "expected application/json");
  }
  const Json body = ParseBody(request);
  std::vector<std::string> criteria;
  const Json* judgments = &body;
  if (body.is_object()) {
    if (!body.contains("judgments")) {
      throw ValidationError("judgments", "missing field 'judgments'");
    }
    judgments = &body.at("judgments");
    if (const auto it = body.find("criteria"); it != body.end()) {
      if (!it->is_array() || !std::all_of(it->begin(), it->end(), [](const Json& c) { return c.is_string(); })) {
        throw ValidationError("criteria", "must be an array of criterion ids");
      }
      criteria = it->get<std::vector<std::string>>();
    }
  }
  const ahp::ComparisonMatrix matrix =
      ahp::BuildMatrix(json_io::ParseJudgments(*judgments, "judgments"), std::move(criteria));
  Json out = json_io::ToJson(ahp::ComputeWeights(matrix));
  out["row_sums"] = ahp::RowSums(matrix.cells());
  out["convergence_gap"] = ahp::ConvergenceGap(matrix);
  return JsonResponse(200, out);
}

ApiResponse Service::ImportCatalog(const ApiRequest& request) {
  if (!Authorized(request)) {
    return Error(401, "admin bearer token required");
  }
  if (!ContentTypeIs(request, "application/json")) {
    return Error(415, "expected application/json");
  }
  const std::uint64_t version = catalog_.Import(request.body);
  const auto snapshot = catalog_.Snapshot();
  return JsonResponse(200, {{"version", version},
                            {"compute", snapshot->compute_offers.size()},
                            {"storage", snapshot->storage_offers.size()},
                            {"network", snapshot->network_offers.size()}});
}

ApiResponse Service::ImportQos(const ApiRequest& request) {
  if (!Authorized(request)) {
    return Error(401, "admin bearer token required");
  }
  if (!ContentTypeIs(request, "text/csv")) {
    return Error(415, "expected text/csv");
  }
  const MergeReport report = qos_.MergeCsv(request.body);
  Json body{{"inserted", report.inserted}, {"duplicates", report.duplicates}, {"errors", ErrorsJson(report.errors)}};
  return JsonResponse(report.errors.empty() ? 200 : 207, body);
}

ApiResponse Service::Averages(const ApiRequest& request) {
  std::vector<QosAverage> averages = qos_.ComputeAverages();
  if (const auto it = request.query.find("client_location"); it != request.query.end()) {
    std::erase_if(averages, [&](const QosAverage& a) { return a.key.client_location != it->second; });
  }
  return JsonResponse(200, json_io::AveragesJson(averages));
}

ApiResponse Service::Offers(const ApiRequest& request) {
  const auto snapshot = catalog_.Snapshot();
  if (!snapshot) {
    return Error(409, "no catalog loaded");
  }
  const auto it = request.query.find("kind");
  if (it == request.query.end()) {
    return JsonResponse(200, {{"version", snapshot->version},
                              {"compute", json_io::OffersJson(*snapshot, "compute")},
                              {"storage", json_io::OffersJson(*snapshot, "storage")},
                              {"network", json_io::OffersJson(*snapshot, "network")}});
  }
  return JsonResponse(200, json_io::OffersJson(*snapshot, it->second));
}

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}

  Service& service;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest api;
    api.method = req.method;
    api.path = req.path;
    for (const auto& [key, value] : req.params) {
      api.query[key] = value;
    }
    for (const auto& [key, value] : req.headers) {
      std::string lower = key;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      api.headers[lower] = value;
    }
    api.body = req.body;
    const ApiResponse out = impl_->service.Handle(api);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  impl_->server.Get(".*", dispatch);
  impl_->server.Post(".*", dispatch);
  impl_->server.Put(".*", dispatch);
  impl_->server.Delete(".*", dispatch);
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Start(const std::string& host, int port) {
  const int bound =
      port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw IoError("cannot bind to " + host + ":" + std::to_string(port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::Listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpServer::Stop() {
  if (!impl_) {
    return;
  }
  impl_->server.stop();
  if (impl_->thread.joinable()) {
    impl_->thread.join();
  }
}

}  // namespace cloudrank
