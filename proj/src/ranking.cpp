#include "cloudrank/ranking.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <thread>
#include <tuple>

#include "cloudrank/errors.hpp"

namespace cloudrank {

namespace {

using ahp::WeightVector;

const std::set<std::string> kCostCriteria{criteria::kCost, criteria::kComputeCost, criteria::kStorageCost,
                                          criteria::kNetworkCost, criteria::kLatency};
const std::set<std::string> kBenefitCriteria{criteria::kDownload, criteria::kUpload, criteria::kRam,
                                             criteria::kDisk};

double ValueOf(const CriterionValues& v, const std::string& criterion) {
  if (criterion == criteria::kCost) return v.total_cost;
  if (criterion == criteria::kComputeCost) return v.compute_cost;
  if (criterion == criteria::kStorageCost) return v.storage_cost;
  if (criterion == criteria::kNetworkCost) return v.network_cost;
  if (criterion == criteria::kLatency) return v.latency_ms;
  if (criterion == criteria::kDownload) return v.download_mbps;
  if (criterion == criteria::kUpload) return v.upload_mbps;
  if (criterion == criteria::kRam) return v.memory_gb;
  if (criterion == criteria::kDisk) return v.disk_gb;
  throw ValidationError("weights", "unknown criterion '" + criterion + "'");
}

void CheckCriteria(const WeightVector& weights, const std::set<std::string>& allowed, const std::string& group) {
  std::set<std::string> seen;
  for (const std::string& c : weights.criteria) {
    if (!allowed.contains(c)) {
      throw ValidationError(group, "unknown criterion '" + c + "'");
    }
    if (!seen.insert(c).second) {
      throw ValidationError(group, "criterion '" + c + "' given twice");
    }
  }
}

struct QosIndex {
  std::map<QosKey, QosTriple> measured;
  // (distance km, triple) observations per service kind, for distance-based estimates.
  std::map<ServiceKind, std::vector<std::pair<double, QosTriple>>> by_distance;
};

QosIndex BuildQosIndex(std::span<const QosAverage> averages, const Catalog& catalog, bool with_estimates) {
  QosIndex index;
  for (const QosAverage& avg : averages) {
    const QosTriple triple{avg.mean_latency_ms, avg.mean_download_mbps, avg.mean_upload_mbps};
    index.measured.emplace(avg.key, triple);
    if (with_estimates) {
      const Location* client = catalog.FindLocation(avg.key.client_location);
      const Location* dc = catalog.FindLocation(avg.key.datacenter_location);
      if (client != nullptr && dc != nullptr) {
        index.by_distance[avg.key.service_kind].emplace_back(GreatCircleKm(*client, *dc), triple);
      }
    }
  }
  return index;
}

std::optional<QosTriple> Estimate(const QosIndex& index, ServiceKind kind, const Location* client,
                                  const Location* datacenter) {
  const auto it = index.by_distance.find(kind);
  if (client == nullptr || datacenter == nullptr || it == index.by_distance.end()) {
    return std::nullopt;
  }
  const double query = GreatCircleKm(*client, *datacenter);
  std::vector<std::pair<double, double>> latency;
  std::vector<std::pair<double, double>> download;
  std::vector<std::pair<double, double>> upload;
  for (const auto& [km, t] : it->second) {
    latency.emplace_back(km, t.latency_ms);
    download.emplace_back(km, t.download_mbps);
    upload.emplace_back(km, t.upload_mbps);
  }
  const auto l = EstimateByDistance(latency, query);
  const auto d = EstimateByDistance(download, query);
  const auto u = EstimateByDistance(upload, query);
  if (!l || !d || !u) {
    return std::nullopt;
  }
  return QosTriple{*l, *d, *u};
}

struct JoinedQos {
  QosTriple triple;
  bool estimated = false;
};

// Inner join of an offer with AvgQoS for the request's client location.
std::optional<JoinedQos> JoinQos(const QosIndex& index, const Catalog& catalog, const RankRequest& request,
                                 const std::string& provider, const std::string& location, ServiceKind kind) {
  const auto it = index.measured.find(QosKey{provider, location, kind, request.client_location});
  if (it != index.measured.end()) {
    return JoinedQos{it->second, false};
  }
  if (!request.estimate_missing_qos) {
    return std::nullopt;
  }
  const auto estimate =
      Estimate(index, kind, catalog.FindLocation(request.client_location), catalog.FindLocation(location));
  if (!estimate) {
    return std::nullopt;
  }
  return JoinedQos{*estimate, true};
}

struct Candidate {
  int compute = -1;
  int storage = -1;
  int network = -1;
  CostBreakdown cost;
  EffectiveQos qos;
  CriterionValues values;
};

void Normalize(std::vector<Candidate>& candidates) {
  if (candidates.empty()) {
    return;
  }
  const std::vector<double CriterionValues::*> fields{
      &CriterionValues::compute_cost, &CriterionValues::storage_cost, &CriterionValues::network_cost,
      &CriterionValues::total_cost,   &CriterionValues::latency_ms,   &CriterionValues::download_mbps,
      &CriterionValues::upload_mbps,  &CriterionValues::memory_gb,    &CriterionValues::disk_gb};
  for (const auto field : fields) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Candidate& c : candidates) {
      lo = std::min(lo, c.values.*field);
      hi = std::max(hi, c.values.*field);
    }
    for (Candidate& c : candidates) {
      c.values.*field = hi > lo ? 1.0 + (c.values.*field - lo) / (hi - lo) : 1.0;
    }
  }
}

using KeyTuple = std::tuple<OfferKey, OfferKey, OfferKey>;

KeyTuple Keys(const ScoredCombination& s) {
  return {s.compute ? s.compute->Key() : OfferKey{}, s.storage ? s.storage->Key() : OfferKey{}, s.network.Key()};
}

}  // namespace

RankRequest DefaultRankRequest() {
  RankRequest r;
  r.min_memory_gb = Decimal::FromInteger(4);
  r.usage.compute_instances = 1;
  r.usage.compute_hours = Decimal::FromInteger(720);
  r.usage.storage_gb = Decimal::FromInteger(20);
  r.usage.data_out_gb = Decimal::FromInteger(50);
  r.usage.data_in_gb = Decimal::FromInteger(1);
  r.cost_weights = {{criteria::kComputeCost, criteria::kStorageCost, criteria::kNetworkCost, criteria::kLatency},
                    {0.35, 0.25, 0.35, 0.05}};
  r.benefit_weights = {{criteria::kDownload, criteria::kUpload}, {0.7, 0.3}};
  return r;
}

void ValidateRankRequest(const RankRequest& request, const Catalog& catalog) {
  ahp::ValidateWeights(request.cost_weights, "cost_weights");
  ahp::ValidateWeights(request.benefit_weights, "benefit_weights");
  CheckCriteria(request.cost_weights, kCostCriteria, "cost_weights");
  CheckCriteria(request.benefit_weights, kBenefitCriteria, "benefit_weights");
  const bool whole = request.cost_weights.Find(criteria::kCost).has_value();
  const bool per_kind = request.cost_weights.Find(criteria::kComputeCost) ||
                        request.cost_weights.Find(criteria::kStorageCost) ||
                        request.cost_weights.Find(criteria::kNetworkCost);
  if (whole && per_kind) {
    throw ValidationError("cost_weights", "use either 'cost' or per-kind cost criteria, not both");
  }
  if (request.price_max.IsNegative() && request.price_max != Decimal::FromInteger(-1)) {
    throw ValidationError("price_max", "must be -1 (unbounded) or nonnegative");
  }
  if (request.min_memory_gb.IsNegative()) {
    throw ValidationError("min_memory_gb", "must be nonnegative");
  }
  if (request.max_memory_gb && *request.max_memory_gb < request.min_memory_gb) {
    throw ValidationError("max_memory_gb", "must not be below min_memory_gb");
  }
  ValidateUsage(request.usage);
  if (request.client_location.empty()) {
    throw ValidationError("client_location", "is required");
  }
  for (const std::string& p : request.providers) {
    if (catalog.FindProvider(p) == nullptr) {
      throw ValidationError("providers", "unknown provider '" + p + "'");
    }
  }
  for (const std::string& l : request.locations) {
    if (catalog.FindLocation(l) == nullptr) {
      throw ValidationError("locations", "unknown location '" + l + "'");
    }
  }
}

std::optional<EffectiveQos> CombineQos(const std::optional<QosTriple>& compute,
                                       const std::optional<QosTriple>& storage) {
  if (compute && storage) {
    return EffectiveQos{{(compute->latency_ms + storage->latency_ms) / 2.0,
                         (compute->download_mbps + storage->download_mbps) / 2.0,
                         (compute->upload_mbps + storage->upload_mbps) / 2.0},
                        QosSource::kAveraged,
                        false};
  }
  if (compute) {
    return EffectiveQos{*compute, QosSource::kCompute, false};
  }
  if (storage) {
    return EffectiveQos{*storage, QosSource::kStorage, false};
  }
  return std::nullopt;
}

CriterionValues MakeCriterionValues(const CostBreakdown& cost, const QosTriple& qos, double memory_gb,
                                    double disk_gb) {
  CriterionValues v;
  v.compute_cost = cost.compute_cost.ToDouble();
  v.storage_cost = cost.storage_cost.ToDouble();
  v.network_cost = cost.network_cost.ToDouble();
  v.total_cost = cost.total.ToDouble();
  v.latency_ms = qos.latency_ms;
  v.download_mbps = qos.download_mbps;
  v.upload_mbps = qos.upload_mbps;
  v.memory_gb = memory_gb;
  v.disk_gb = disk_gb;
  return v;
}

std::optional<ScoreBreakdown> Score(const CriterionValues& values, const WeightVector& cost_weights,
                                    const WeightVector& benefit_weights) {
  ScoreBreakdown out;
  for (std::size_t i = 0; i < cost_weights.criteria.size(); ++i) {
    const double value = ValueOf(values, cost_weights.criteria[i]);
    const double contribution = cost_weights.weights[i] * value;
    out.numerator_terms.push_back({cost_weights.criteria[i], cost_weights.weights[i], value, contribution});
    out.numerator += contribution;
  }
  for (std::size_t i = 0; i < benefit_weights.criteria.size(); ++i) {
    const double value = ValueOf(values, benefit_weights.criteria[i]);
    const double contribution = benefit_weights.weights[i] * value;
    out.denominator_terms.push_back({benefit_weights.criteria[i], benefit_weights.weights[i], value, contribution});
    out.denominator += contribution;
  }
  if (!(out.denominator > 0.0)) {
    return std::nullopt;
  }
  out.ratio = out.numerator / out.denominator;
  return out;
}

bool RatioOrderLess(const ScoredCombination& a, const ScoredCombination& b) {
  if (a.score.ratio != b.score.ratio) {
    return a.score.ratio < b.score.ratio;
  }
  if (a.cost.total != b.cost.total) {
    return a.cost.total < b.cost.total;
  }
  return Keys(a) < Keys(b);
}

bool CostOrderLess(const ScoredCombination& a, const ScoredCombination& b) {
  if (a.cost.total != b.cost.total) {
    return a.cost.total < b.cost.total;
  }
  return Keys(a) < Keys(b);
}

RankResult Rank(const RankRequest& request, const Catalog& catalog, std::span<const QosAverage> averages,
                RankOrder order, const RankOptions& options) {
  ValidateRankRequest(request, catalog);
  RankResult result;
  const UsageEstimate& usage = request.usage;
  const bool use_compute = usage.UsesCompute();
  const bool use_storage = usage.UsesStorage();
  if (!use_compute && !use_storage) {
    // Network alone carries no QoS measurements, so nothing can be scored.
    return result;
  }

  // Filtering on the static characteristics.
  std::vector<ComputeOffer> compute;
  std::vector<StorageOffer> storage;
  if (use_compute) {
    compute = FilterCompute(catalog, {request.providers, request.locations, request.min_memory_gb,
                                      request.max_memory_gb});
  }
  if (use_storage) {
    storage = FilterStorage(catalog, {request.providers, request.locations, usage.storage_gb});
  }
  const std::vector<NetworkOffer> network =
      FilterNetwork(catalog, {request.providers, request.locations, usage.data_in_gb, usage.data_out_gb});

  // Link offers with QoS statistics; offers without them drop out here.
  const QosIndex qos_index = BuildQosIndex(averages, catalog, request.estimate_missing_qos);
  auto join = [&]<typename Offer>(std::vector<Offer>& offers, ServiceKind kind) {
    std::vector<JoinedQos> joined;
    std::vector<Offer> kept;
    for (Offer& o : offers) {
      if (auto q = JoinQos(qos_index, catalog, request, o.provider, o.location, kind)) {
        joined.push_back(*q);
        kept.push_back(std::move(o));
      } else {
        ++result.stats.excluded_no_qos;
      }
    }
    offers = std::move(kept);
    return joined;
  };
  const std::vector<JoinedQos> compute_qos = join(compute, ServiceKind::kCompute);
  const std::vector<JoinedQos> storage_qos = join(storage, ServiceKind::kStorage);
  result.stats.compute_candidates = compute.size();
  result.stats.storage_candidates = storage.size();
  result.stats.network_candidates = network.size();

  // Per-offer costs do not depend on the combination they end up in.
  std::vector<Decimal> compute_cost;
  for (const ComputeOffer& c : compute) {
    compute_cost.push_back(
        PeriodCost(Decimal::FromInteger(usage.compute_instances), c.price_per_hour, usage.compute_hours));
  }
  std::vector<Decimal> storage_cost;
  for (const StorageOffer& s : storage) {
    storage_cost.push_back(*TieredCost(s.tiers, usage.storage_gb));
  }
  std::vector<Decimal> network_cost;
  for (const NetworkOffer& n : network) {
    network_cost.push_back(*TieredCost(n.outbound_tiers, usage.data_out_gb) +
                           *TieredCost(n.inbound_tiers, usage.data_in_gb));
  }

  const Decimal instances = Decimal::FromInteger(usage.compute_instances);
  const bool budget = !request.price_max.IsNegative();
  std::vector<Candidate> candidates;
  auto consider = [&](int ci, int si, int ni) {
    ++result.stats.evaluated;
    Candidate cand{ci, si, ni, {}, {}, {}};
    cand.cost.compute_present = ci >= 0;
    cand.cost.storage_present = si >= 0;
    cand.cost.compute_cost = ci >= 0 ? compute_cost[ci] : Decimal{};
    cand.cost.storage_cost = si >= 0 ? storage_cost[si] : Decimal{};
    cand.cost.network_cost = network_cost[ni];
    cand.cost.total = cand.cost.compute_cost + cand.cost.storage_cost + cand.cost.network_cost;
    if (budget && cand.cost.total > request.price_max) {
      ++result.stats.excluded_budget;
      return;
    }
    std::optional<QosTriple> cq;
    std::optional<QosTriple> sq;
    if (ci >= 0) cq = compute_qos[ci].triple;
    if (si >= 0) sq = storage_qos[si].triple;
    cand.qos = *CombineQos(cq, sq);
    cand.qos.estimated = (ci >= 0 && compute_qos[ci].estimated) || (si >= 0 && storage_qos[si].estimated);
    double memory = 0.0;
    double disk = 0.0;
    if (ci >= 0) {
      memory = (compute[ci].memory_gb * instances).ToDouble();
      disk = (compute[ci].disk_gb * instances).ToDouble();
    }
    cand.values = MakeCriterionValues(cand.cost, cand.qos.values, memory, disk);
    candidates.push_back(cand);
  };

  // Match compute, storage and network options.
  if (request.single_provider) {
    std::map<std::pair<std::string, std::string>, std::vector<int>> storage_at;
    std::map<std::pair<std::string, std::string>, std::vector<int>> network_at;
    for (int i = 0; i < static_cast<int>(storage.size()); ++i) {
      storage_at[{storage[i].provider, storage[i].location}].push_back(i);
    }
    for (int i = 0; i < static_cast<int>(network.size()); ++i) {
      network_at[{network[i].provider, network[i].location}].push_back(i);
    }
    auto at = [](const auto& groups, const std::string& p, const std::string& l) -> const std::vector<int>& {
      static const std::vector<int> kNone;
      const auto it = groups.find({p, l});
      return it == groups.end() ? kNone : it->second;
    };
    if (use_compute) {
      for (int ci = 0; ci < static_cast<int>(compute.size()); ++ci) {
        const auto& nets = at(network_at, compute[ci].provider, compute[ci].location);
        if (use_storage) {
          for (const int si : at(storage_at, compute[ci].provider, compute[ci].location)) {
            for (const int ni : nets) consider(ci, si, ni);
          }
        } else {
          for (const int ni : nets) consider(ci, -1, ni);
        }
      }
    } else {
      for (int si = 0; si < static_cast<int>(storage.size()); ++si) {
        for (const int ni : at(network_at, storage[si].provider, storage[si].location)) consider(-1, si, ni);
      }
    }
  } else {
    const int nc = use_compute ? static_cast<int>(compute.size()) : 1;
    const int ns = use_storage ? static_cast<int>(storage.size()) : 1;
    for (int ci = 0; ci < nc; ++ci) {
      for (int si = 0; si < ns; ++si) {
        for (int ni = 0; ni < static_cast<int>(network.size()); ++ni) {
          consider(use_compute ? ci : -1, use_storage ? si : -1, ni);
        }
      }
    }
  }

  if (request.normalize) {
    Normalize(candidates);
  }

  // Score in contiguous partitions, then merge; the final sort makes the order partition-independent.
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, candidates.size() / 256 + 1));
  std::vector<std::vector<ScoredCombination>> parts(workers);
  std::vector<std::size_t> zero_benefit(workers, 0);
  auto score_range = [&](unsigned part, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Candidate& cand = candidates[i];
      auto score = Score(cand.values, request.cost_weights, request.benefit_weights);
      if (!score) {
        ++zero_benefit[part];
        continue;
      }
      ScoredCombination s;
      if (cand.compute >= 0) {
        s.compute = compute[cand.compute];
        s.memory_gb = (compute[cand.compute].memory_gb * instances).ToDouble();
        s.disk_gb = (compute[cand.compute].disk_gb * instances).ToDouble();
      }
      if (cand.storage >= 0) s.storage = storage[cand.storage];
      s.network = network[cand.network];
      s.cost = cand.cost;
      s.qos = cand.qos;
      s.score = std::move(*score);
      parts[part].push_back(std::move(s));
    }
  };
  const std::size_t chunk = (candidates.size() + workers - 1) / workers;
  if (workers == 1) {
    score_range(0, 0, candidates.size());
  } else {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(candidates.size(), w * chunk);
      const std::size_t end = std::min(candidates.size(), begin + chunk);
      threads.emplace_back(score_range, w, begin, end);
    }
  }
  for (unsigned w = 0; w < workers; ++w) {
    result.stats.excluded_zero_benefit += zero_benefit[w];
    for (ScoredCombination& s : parts[w]) {
      result.solutions.push_back(std::move(s));
    }
  }

  std::sort(result.solutions.begin(), result.solutions.end(),
            order == RankOrder::kRatio ? RatioOrderLess : CostOrderLess);
  for (std::size_t i = 0; i < result.solutions.size(); ++i) {
    result.solutions[i].rank_position = i + 1;
  }
  return result;
}

RankResult OrderedSolutions(const RankRequest& request, const Catalog& catalog, std::span<const QosAverage> averages,
                            const RankOptions& options) {
  return Rank(request, catalog, averages, RankOrder::kRatio, options);
}

RankResult RankByCostOnly(const RankRequest& request, const Catalog& catalog, std::span<const QosAverage> averages,
                          const RankOptions& options) {
  return Rank(request, catalog, averages, RankOrder::kCost, options);
}

}  // namespace cloudrank
