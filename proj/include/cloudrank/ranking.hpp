#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cloudrank/ahp.hpp"
#include "cloudrank/catalog.hpp"
#include "cloudrank/pricing.hpp"
#include "cloudrank/qos.hpp"

namespace cloudrank {

// Criterion ids accepted in RankRequest weight vectors.
namespace criteria {
inline constexpr const char* kCost = "cost";  // weight on the summed total cost
inline constexpr const char* kComputeCost = "compute_cost";
inline constexpr const char* kStorageCost = "storage_cost";
inline constexpr const char* kNetworkCost = "network_cost";
inline constexpr const char* kLatency = "latency";
inline constexpr const char* kDownload = "download";
inline constexpr const char* kUpload = "upload";
inline constexpr const char* kRam = "ram";
inline constexpr const char* kDisk = "disk";
}  // namespace criteria

struct RankRequest {
  std::set<std::string> locations;  // empty = all
  std::set<std::string> providers;  // empty = all
  Decimal min_memory_gb;
  std::optional<Decimal> max_memory_gb;
  Decimal price_max = Decimal::FromInteger(-1);  // -1 unbounded, 0 free only
  UsageEstimate usage;
  std::string client_location;
  // Either {cost, latency} or {compute_cost, storage_cost, network_cost, latency}.
  ahp::WeightVector cost_weights;
  // Any subset of {download, upload, ram, disk}.
  ahp::WeightVector benefit_weights;
  bool single_provider = false;
  // Offers without measured QoS get distance-based estimates instead of being dropped.
  bool estimate_missing_qos = false;
  // Min-max rescale every criterion to [1, 2] across the candidate set before weighting.
  bool normalize = false;
};

// Defaults of the reference input form: 35/25/35/5 cost side, 70/30 download/upload, min RAM 4 GB,
// 20 GB storage, 50 GB out, 1 GB in, one instance for 720 hours.
RankRequest DefaultRankRequest();

// Throws ValidationError naming the field: weight groups, criteria names, price_max, usage, unknown ids.
void ValidateRankRequest(const RankRequest& request, const Catalog& catalog);

struct QosTriple {
  double latency_ms = 0.0;
  double download_mbps = 0.0;
  double upload_mbps = 0.0;
};

enum class QosSource { kCompute, kStorage, kAveraged };

struct EffectiveQos {
  QosTriple values;
  QosSource source = QosSource::kCompute;
  bool estimated = false;
};

// Averages the two triples component-wise when both exist, passes a single one through, nullopt when neither.
std::optional<EffectiveQos> CombineQos(const std::optional<QosTriple>& compute, const std::optional<QosTriple>& storage);

struct ScoreTerm {
  std::string criterion;
  double weight = 0.0;
  double value = 0.0;
  double contribution = 0.0;  // weight * value
};

struct ScoreBreakdown {
  std::vector<ScoreTerm> numerator_terms;
  std::vector<ScoreTerm> denominator_terms;
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

// Raw criterion values of one combination before weighting.
struct CriterionValues {
  double compute_cost = 0.0;
  double storage_cost = 0.0;
  double network_cost = 0.0;
  double total_cost = 0.0;
  double latency_ms = 0.0;
  double download_mbps = 0.0;
  double upload_mbps = 0.0;
  double memory_gb = 0.0;
  double disk_gb = 0.0;
};

CriterionValues MakeCriterionValues(const CostBreakdown& cost, const QosTriple& qos, double memory_gb, double disk_gb);

/*
 * Weighted cost/benefit ratio: (sum of weighted cost terms + w_latency * latency) / (sum of weighted benefit terms).
 * Lower is better. nullopt when the weighted benefit sum is not positive.
 */
std::optional<ScoreBreakdown> Score(const CriterionValues& values, const ahp::WeightVector& cost_weights,
                                    const ahp::WeightVector& benefit_weights);

struct ScoredCombination {
  std::optional<ComputeOffer> compute;
  std::optional<StorageOffer> storage;
  NetworkOffer network;
  CostBreakdown cost;
  EffectiveQos qos;
  double memory_gb = 0.0;  // compute memory x instances
  double disk_gb = 0.0;    // compute disk x instances
  ScoreBreakdown score;
  std::size_t rank_position = 0;

  double ratio() const { return score.ratio; }
};

struct RankStats {
  std::size_t compute_candidates = 0;
  std::size_t storage_candidates = 0;
  std::size_t network_candidates = 0;
  std::size_t evaluated = 0;
  std::size_t excluded_no_qos = 0;  // offers dropped by the QoS join
  std::size_t excluded_budget = 0;
  std::size_t excluded_zero_benefit = 0;
};

struct RankResult {
  std::vector<ScoredCombination> solutions;
  RankStats stats;
};

struct RankOptions {
  // Scoring is split across this many threads; the output never depends on it.
  unsigned workers = 1;
};

enum class RankOrder { kRatio, kCost };

// Strict weak orderings used for the two result orders. Both end on the offer keys, so they are total.
bool RatioOrderLess(const ScoredCombination& a, const ScoredCombination& b);
bool CostOrderLess(const ScoredCombination& a, const ScoredCombination& b);

/*
 * Filters the catalog, joins offers with the QoS averages seen from request.client_location, enumerates
 * compute x storage x network combinations (same provider and location when single_provider), prices them,
 * drops those over budget, scores the rest and sorts ascending by ratio.
 */
RankResult OrderedSolutions(const RankRequest& request, const Catalog& catalog, std::span<const QosAverage> averages,
                            const RankOptions& options = {});

// Same pipeline, ordered by total cost ascending.
RankResult RankByCostOnly(const RankRequest& request, const Catalog& catalog, std::span<const QosAverage> averages,
                          const RankOptions& options = {});

RankResult Rank(const RankRequest& request, const Catalog& catalog, std::span<const QosAverage> averages,
                RankOrder order, const RankOptions& options = {});

}  // namespace cloudrank
