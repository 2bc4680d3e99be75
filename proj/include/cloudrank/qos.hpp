#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cloudrank/catalog.hpp"

namespace cloudrank {

enum class ServiceKind { kCompute, kStorage };

std::string_view ToString(ServiceKind kind);
std::optional<ServiceKind> ParseServiceKind(std::string_view text);

struct QosKey {
  std::string provider;
  std::string datacenter_location;
  ServiceKind service_kind = ServiceKind::kCompute;
  std::string client_location;

  friend auto operator<=>(const QosKey&, const QosKey&) = default;
  friend bool operator==(const QosKey&, const QosKey&) = default;
};

// One measurement from a client vantage point. Latency in ms, throughput in Mbit/s.
struct QosSample {
  QosKey key;
  std::int64_t timestamp = 0;  // UTC seconds
  double latency_ms = 0.0;
  double download_mbps = 0.0;
  double upload_mbps = 0.0;

  friend bool operator==(const QosSample&, const QosSample&) = default;
};

// Throws ValidationError if any measurement is nonpositive/non-finite or an id is empty.
void ValidateSample(const QosSample& sample);

struct QosAverage {
  QosKey key;
  double mean_latency_ms = 0.0;
  double mean_download_mbps = 0.0;
  double mean_upload_mbps = 0.0;
  std::int64_t sample_count = 0;
};

inline constexpr std::string_view kSampleCsvHeader =
    "provider,datacenter_location,service_kind,client_location,timestamp_utc,latency_ms,download_mbps,upload_mbps";

// Header plus one LF-terminated row per sample, in the given order. Numbers use the shortest round-trip form.
std::string FormatSamplesCsv(std::span<const QosSample> samples);

struct CsvRowError {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

struct ParsedSamples {
  std::vector<QosSample> samples;
  std::vector<CsvRowError> errors;
};

// Bad rows are reported and skipped; a missing or wrong header is reported as a line-1 error with no samples.
ParsedSamples ParseSamplesCsv(std::string_view text);

struct MergeReport {
  std::size_t inserted = 0;
  std::size_t duplicates = 0;
  std::vector<CsvRowError> errors;
};

/*
 * Sample store used both by probe agents (local samples) and by the master (merged samples from all agents).
 * Samples are identified by (key, timestamp); merging is idempotent and the stored set does not depend on the order
 * batches arrive in. When two different samples share an identity the smaller measurement tuple is kept.
 */
class SampleStore {
 public:
  // Returns the number of newly inserted samples. Invalid samples are rejected with ValidationError before any insert.
  std::size_t Merge(std::span<const QosSample> batch);
  MergeReport MergeCsv(std::string_view csv);

  // Samples with timestamp >= since, ordered by timestamp then key.
  std::vector<QosSample> Since(std::int64_t since) const;
  std::string ExportCsv(std::int64_t since) const;

  // Arithmetic means per key, ordered by key. Deterministic regardless of insertion order.
  std::vector<QosAverage> ComputeAverages() const;

  std::size_t size() const;

 private:
  struct Identity {
    QosKey key;
    std::int64_t timestamp;
    friend auto operator<=>(const Identity&, const Identity&) = default;
  };
  struct Measurement {
    double latency_ms;
    double download_mbps;
    double upload_mbps;
    friend auto operator<=>(const Measurement&, const Measurement&) = default;
  };

  bool InsertLocked(const QosSample& sample);

  mutable std::mutex mutex_;
  std::map<Identity, Measurement> samples_;
};

// Computes means over an arbitrary sample list (same grouping as SampleStore::ComputeAverages).
std::vector<QosAverage> ComputeAverages(std::span<const QosSample> samples);

// Haversine distance on a 6371 km sphere.
double GreatCircleKm(const Location& a, const Location& b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of y on x. nullopt unless at least two distinct x values are present.
std::optional<LinearFit> FitLine(std::span<const std::pair<double, double>> points);

/*
 * Predicts a metric at `query_km` from (distance, value) observations by a least-squares line, clamped below at the
 * smallest observed value. nullopt when fewer than two distinct distances are known.
 */
std::optional<double> EstimateByDistance(std::span<const std::pair<double, double>> observations, double query_km);

struct LatencyEstimate {
  double latency_ms = 0.0;
  bool estimated = true;
};

// Latency for a client/datacenter pair with no measurements, fitted from `known` averages whose locations resolve in
// `catalog`. nullopt is the explicit "no estimate" outcome.
std::optional<LatencyEstimate> EstimateLatencyFallback(const Location& client, const Location& datacenter,
                                                       std::span<const QosAverage> known, const Catalog& catalog);

}  // namespace cloudrank
