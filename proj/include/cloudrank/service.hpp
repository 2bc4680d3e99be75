#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "cloudrank/catalog.hpp"
#include "cloudrank/qos.hpp"

namespace cloudrank {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct ServiceConfig {
  std::string admin_token;
  std::size_t default_limit = 100;
  unsigned workers = 1;
  // Source of generated_at; the default reads the system clock.
  std::function<std::int64_t()> clock;
};

/*
 * Request handling for the recommendation API, independent of the HTTP transport:
 *   POST /api/rank                 RankRequest JSON -> RankResponse (limit, offset, by=ratio|cost)
 *   POST /api/weights              judgments -> weights + convergence gap
 *   POST /api/catalog/import       catalog document (admin token)
 *   POST /api/qos/import           sample CSV (admin token); 207 with line numbers when rows are rejected
 *   GET  /api/qos/averages         ?client_location=
 *   GET  /api/catalog/offers       ?kind=compute|storage|network
 * Ranking reads an immutable catalog snapshot, so imports never block or disturb it.
 */
class Service {
 public:
  explicit Service(ServiceConfig config);

  ApiResponse Handle(const ApiRequest& request);

  CatalogStore& catalog() { return catalog_; }
  SampleStore& qos() { return qos_; }

 private:
  ApiResponse Rank(const ApiRequest& request);
  ApiResponse Weights(const ApiRequest& request);
  ApiResponse ImportCatalog(const ApiRequest& request);
  ApiResponse ImportQos(const ApiRequest& request);
  ApiResponse Averages(const ApiRequest& request);
  ApiResponse Offers(const ApiRequest& request);
  bool Authorized(const ApiRequest& request) const;

  ServiceConfig config_;
  CatalogStore catalog_;
  SampleStore qos_;
};

// Serves a Service over HTTP on a background thread.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int Start(const std::string& host, int port);
  // Blocks in the calling thread until Stop() is called from elsewhere.
  void Listen(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cloudrank
