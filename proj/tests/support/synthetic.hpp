#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "cloudrank/catalog.hpp"
#include "cloudrank/qos.hpp"
#include "cloudrank/ranking.hpp"

namespace testsupport {

using Rng = std::mt19937_64;

std::string FixturePath(const std::string& name);
std::string ReadText(const std::string& path);

cloudrank::Decimal Dec(const char* text);

// Random block-declining schedule with integer band edges. The last band is unbounded unless `allow_bounded`.
std::vector<cloudrank::PriceTier> RandomTiers(Rng& rng, bool allow_bounded);

struct Synthetic {
  cloudrank::Catalog catalog;
  std::vector<cloudrank::QosAverage> averages;
  std::string client_location;
};

// Up to `max_offers` offers over at most 5 providers and 6 datacenter locations. Some offers lack QoS data.
Synthetic RandomSynthetic(Rng& rng, std::size_t max_offers = 200);

// A request valid against `s.catalog`, exercising filters, budgets, zero-usage kinds and every weight layout.
cloudrank::RankRequest RandomRequest(Rng& rng, const Synthetic& s);

using ComboKey = std::tuple<cloudrank::OfferKey, cloudrank::OfferKey, cloudrank::OfferKey>;

struct OracleRow {
  ComboKey key;
  cloudrank::Decimal total;
  double ratio = 0.0;
};

ComboKey KeyOf(const cloudrank::ScoredCombination& s);

// Enumerate-price-score-sort over the raw catalog, written without the library's filter, pricing or ranking code.
std::vector<OracleRow> BruteForceRank(const cloudrank::RankRequest& request, const cloudrank::Catalog& catalog,
                                      const std::vector<cloudrank::QosAverage>& averages, bool by_cost = false);

// Exact marginal tier cost over integer micros with half-even rounding per band.
std::optional<cloudrank::Decimal> OracleTieredCost(const std::vector<cloudrank::PriceTier>& tiers,
                                                   cloudrank::Decimal usage);

// Integer usage priced one GB at a time at the rate of the band that GB falls in.
std::optional<cloudrank::Decimal> GbByGbCost(const std::vector<cloudrank::PriceTier>& tiers, std::int64_t usage_gb);

// One storage and one network plan plus compute offers split by memory so that requests with min RAM
// 0/4/8/16 GB yield exactly 3808/2095/1524/552 combinations under the default request.
Synthetic TableTenSynthetic();

// Two single-provider stacks where the cheapest one has 25x worse download speed.
Synthetic DivergenceSynthetic();

}  // namespace testsupport
