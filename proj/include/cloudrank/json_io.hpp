#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudrank/ahp.hpp"
#include "cloudrank/catalog.hpp"
#include "cloudrank/qos.hpp"
#include "cloudrank/ranking.hpp"

namespace cloudrank::json_io {

using Json = nlohmann::json;

/*
 * Rank request body. Every field is optional except client_location; omitted fields take the
 * DefaultRankRequest() values. Weights are given either directly as {"criterion": weight, ...} or
 * {"criteria": [...], "weights": [...]}, or derived from pairwise judgments via "cost_judgments" /
 * "benefit_judgments" ([{criterion_a, criterion_b, value}, ...]). Throws ValidationError naming the field.
 */
RankRequest ParseRankRequest(const Json& body);
Json ToJson(const RankRequest& request);

std::vector<ahp::Judgment> ParseJudgments(const Json& array, const std::string& where);
Json ToJson(const ahp::WeightVector& weights);

Json ToJson(const ComputeOffer& offer);
Json ToJson(const StorageOffer& offer);
Json ToJson(const NetworkOffer& offer);
Json OffersJson(const Catalog& catalog, const std::string& kind);

Json ToJson(const QosAverage& average);
Json AveragesJson(std::span<const QosAverage> averages);

Json ToJson(const ScoredCombination& solution);
Json ToJson(const RankStats& stats);

// Page of a ranking as served by the API and printed by the CLI. generated_at is omitted when zero.
Json RankResponseJson(const RankRequest& request, const RankResult& result, std::uint64_t catalog_version,
                      std::size_t offset, std::size_t limit, std::int64_t generated_at);

// Providers of a combination in compute, storage, network order, without repeats, joined with '+'.
std::string ProvidersLabel(const ScoredCombination& solution);

inline constexpr const char* kRankCsvHeader =
    "rank,providers,compute,storage,network,total_cost,latency_ms,download_mbps,upload_mbps,ratio";
std::string RankCsv(std::span<const ScoredCombination> solutions);

}  // namespace cloudrank::json_io
