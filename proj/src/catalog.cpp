#include "cloudrank/catalog.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "cloudrank/errors.hpp"
#include "json_util.hpp"

namespace cloudrank {

using detail::Json;
using detail::Require;
using detail::RequireDecimal;
using detail::RequireDouble;
using detail::RequireString;

namespace {

struct PriceContext {
  const std::string& display_currency;
  const std::map<std::string, Decimal>& rates;
};

// A price is either a bare number (display currency) or {"amount": .., "currency": ".."}.
Decimal ParsePrice(const Json& value, const PriceContext& ctx, const std::string& where) {
  Decimal amount;
  std::string currency = ctx.display_currency;
  if (value.is_object()) {
    amount = RequireDecimal(value, "amount", where);
    currency = RequireString(value, "currency", where);
  } else {
    amount = detail::ToDecimal(value, where);
  }
  if (amount.IsNegative()) {
    throw ValidationError(where, "price must be nonnegative");
  }
  if (currency == ctx.display_currency) {
    return amount;
  }
  const auto rate = ctx.rates.find(currency);
  if (rate == ctx.rates.end()) {
    throw ValidationError(where, "no exchange rate for currency '" + currency + "'");
  }
  return amount * rate->second;
}

std::optional<Decimal> ParseBound(const Json& value, const std::string& where) {
  if (value.is_string() && value.get<std::string>() == "unbounded") {
    return std::nullopt;
  }
  return detail::ToDecimal(value, where);
}

std::vector<PriceTier> ParseTiers(const Json& value, const PriceContext& ctx, const std::string& where) {
  if (!value.is_array() || value.empty()) {
    throw ValidationError(where, "expected a nonempty array of tiers");
  }
  std::vector<PriceTier> tiers;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const std::string tier_where = where + "[" + std::to_string(i) + "]";
    const Json& t = value[i];
    PriceTier tier;
    tier.quota_min_gb = RequireDecimal(t, "quota_min_gb", tier_where);
    tier.quota_max_gb = ParseBound(Require(t, "quota_max_gb", tier_where), tier_where + ".quota_max_gb");
    tier.unit_price_per_gb = ParsePrice(Require(t, "unit_price_per_gb", tier_where), ctx, tier_where);
    tiers.push_back(tier);
  }
  ValidateTiers(tiers, where);
  return tiers;
}

std::string Describe(const std::string& kind, std::size_t index, const OfferKey& key) {
  std::string out = kind + "[" + std::to_string(index) + "] (" + key.provider + "/" + key.location;
  if (!key.service_name.empty()) {
    out += "/" + key.service_name;
  }
  return out + ")";
}

OfferKey PeekKey(const Json& record, bool named) {
  auto peek = [&](const char* field) -> std::string {
    const auto it = record.find(field);
    return it != record.end() && it->is_string() ? it->get<std::string>() : "?";
  };
  OfferKey key;
  if (record.is_object()) {
    key.provider = peek("provider");
    key.location = peek("location");
    if (named) {
      key.service_name = peek("service_name");
    }
  }
  return key;
}

bool InSet(const std::set<std::string>& allowed, const std::string& value) {
  return allowed.empty() || allowed.contains(value);
}

bool TiersCover(const std::vector<PriceTier>& tiers, Decimal usage) {
  if (tiers.empty()) {
    return false;
  }
  const PriceTier& last = tiers.back();
  return !last.Bounded() || usage <= *last.quota_max_gb;
}

}  // namespace

void ValidateTiers(const std::vector<PriceTier>& tiers, const std::string& where) {
  if (tiers.empty()) {
    throw ValidationError(where, "tier list is empty");
  }
  Decimal expected_min;
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    const PriceTier& tier = tiers[i];
    const std::string tier_where = where + " tier " + std::to_string(i);
    if (tier.quota_min_gb != expected_min) {
      throw ValidationError(where, "tiers not contiguous: tier " + std::to_string(i) + " starts at " +
                                       tier.quota_min_gb.ToString() + ", expected " + expected_min.ToString());
    }
    if (tier.unit_price_per_gb.IsNegative()) {
      throw ValidationError(tier_where, "unit price must be nonnegative");
    }
    if (!tier.Bounded()) {
      if (i + 1 != tiers.size()) {
        throw ValidationError(tier_where, "only the last tier may be unbounded");
      }
      break;
    }
    if (*tier.quota_max_gb <= tier.quota_min_gb) {
      throw ValidationError(tier_where, "quota_max_gb must exceed quota_min_gb");
    }
    expected_min = *tier.quota_max_gb;
  }
}

const Location* Catalog::FindLocation(std::string_view id) const {
  const auto it = std::find_if(locations.begin(), locations.end(), [&](const Location& l) { return l.id == id; });
  return it == locations.end() ? nullptr : &*it;
}

const Provider* Catalog::FindProvider(std::string_view id) const {
  const auto it = std::find_if(providers.begin(), providers.end(), [&](const Provider& p) { return p.id == id; });
  return it == providers.end() ? nullptr : &*it;
}

Catalog ParseCatalog(std::string_view document) {
  Json root;
  try {
    root = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw ValidationError("document", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) {
    throw ValidationError("document", "top level must be an object");
  }
  for (const char* key : {"providers", "locations", "compute", "storage", "network"}) {
    const auto it = root.find(key);
    if (it == root.end()) {
      throw ValidationError(key, "missing section");
    }
    if (!it->is_array()) {
      throw ValidationError(key, "must be an array");
    }
  }

  Catalog catalog;
  catalog.display_currency = detail::OptionalString(root, "display_currency", "AUD");
  if (const auto rates = root.find("exchange_rates"); rates != root.end()) {
    if (!rates->is_object()) {
      throw ValidationError("exchange_rates", "must be an object of code -> rate");
    }
    for (const auto& [code, rate] : rates->items()) {
      const Decimal value = detail::ToDecimal(rate, "exchange_rates." + code);
      if (value <= Decimal{}) {
        throw ValidationError("exchange_rates." + code, "rate must be positive");
      }
      catalog.exchange_rates.emplace(code, value);
    }
  }
  const PriceContext ctx{catalog.display_currency, catalog.exchange_rates};
  const Json empty = Json::array();
  auto section = [&](const char* key) -> const Json& {
    const auto it = root.find(key);
    return it == root.end() ? empty : *it;
  };

  std::set<std::string> provider_ids;
  const Json& providers = section("providers");
  for (std::size_t i = 0; i < providers.size(); ++i) {
    const std::string where = "providers[" + std::to_string(i) + "]";
    Provider p{RequireString(providers[i], "id", where), detail::OptionalString(providers[i], "display_name", "")};
    if (p.id.empty()) {
      throw ValidationError(where, "id must be non-empty");
    }
    if (!provider_ids.insert(p.id).second) {
      throw ValidationError(where, "duplicate provider id '" + p.id + "'");
    }
    if (p.display_name.empty()) {
      p.display_name = p.id;
    }
    catalog.providers.push_back(std::move(p));
  }

  std::set<std::string> location_ids;
  const Json& locations = section("locations");
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const std::string where = "locations[" + std::to_string(i) + "]";
    Location l;
    l.id = RequireString(locations[i], "id", where);
    l.display_name = detail::OptionalString(locations[i], "display_name", l.id);
    l.latitude = RequireDouble(locations[i], "latitude", where);
    l.longitude = RequireDouble(locations[i], "longitude", where);
    if (l.id.empty()) {
      throw ValidationError(where, "id must be non-empty");
    }
    if (l.latitude < -90.0 || l.latitude > 90.0 || l.longitude < -180.0 || l.longitude > 180.0) {
      throw ValidationError(where, "coordinates out of range");
    }
    if (!location_ids.insert(l.id).second) {
      throw ValidationError(where, "duplicate location id '" + l.id + "'");
    }
    catalog.locations.push_back(std::move(l));
  }

  auto check_refs = [&](const std::string& where, const OfferKey& key) {
    if (!provider_ids.contains(key.provider)) {
      throw ValidationError(where, "unknown provider '" + key.provider + "'");
    }
    if (!location_ids.contains(key.location)) {
      throw ValidationError(where, "unknown location '" + key.location + "'");
    }
  };

  std::set<OfferKey> seen;
  const Json& compute = section("compute");
  for (std::size_t i = 0; i < compute.size(); ++i) {
    const Json& r = compute[i];
    const std::string where = Describe("compute", i, PeekKey(r, true));
    ComputeOffer o;
    o.provider = RequireString(r, "provider", where);
    o.location = RequireString(r, "location", where);
    o.service_name = RequireString(r, "service_name", where);
    o.memory_gb = RequireDecimal(r, "memory_gb", where);
    const Json& cores = Require(r, "cpu_cores", where);
    if (!cores.is_number_integer() || cores.get<std::int64_t>() <= 0) {
      throw ValidationError(where, "cpu_cores must be a positive integer");
    }
    o.cpu_cores = cores.get<int>();
    o.cpu_speed_ghz = RequireDecimal(r, "cpu_speed_ghz", where);
    o.disk_gb = RequireDecimal(r, "disk_gb", where);
    o.price_per_hour = ParsePrice(Require(r, "price_per_hour", where), ctx, where + ".price_per_hour");
    check_refs(where, o.Key());
    if (o.service_name.empty()) {
      throw ValidationError(where, "service_name must be non-empty");
    }
    if (o.memory_gb <= Decimal{}) {
      throw ValidationError(where, "memory_gb must be positive");
    }
    if (o.cpu_speed_ghz <= Decimal{}) {
      throw ValidationError(where, "cpu_speed_ghz must be positive");
    }
    if (o.disk_gb.IsNegative()) {
      throw ValidationError(where, "disk_gb must be nonnegative");
    }
    if (!seen.insert(o.Key()).second) {
      throw ValidationError(where, "duplicate compute offer");
    }
    catalog.compute_offers.push_back(std::move(o));
  }

  seen.clear();
  const Json& storage = section("storage");
  for (std::size_t i = 0; i < storage.size(); ++i) {
    const Json& r = storage[i];
    const std::string where = Describe("storage", i, PeekKey(r, true));
    StorageOffer o;
    o.provider = RequireString(r, "provider", where);
    o.location = RequireString(r, "location", where);
    o.service_name = RequireString(r, "service_name", where);
    check_refs(where, o.Key());
    if (o.service_name.empty()) {
      throw ValidationError(where, "service_name must be non-empty");
    }
    o.tiers = ParseTiers(Require(r, "tiers", where), ctx, where);
    if (const auto cap = r.find("max_capacity_gb"); cap != r.end()) {
      o.max_capacity_gb = ParseBound(*cap, where + ".max_capacity_gb");
      if (o.max_capacity_gb && *o.max_capacity_gb <= Decimal{}) {
        throw ValidationError(where, "max_capacity_gb must be positive");
      }
    }
    if (!seen.insert(o.Key()).second) {
      throw ValidationError(where, "duplicate storage offer");
    }
    catalog.storage_offers.push_back(std::move(o));
  }

  seen.clear();
  const Json& network = section("network");
  for (std::size_t i = 0; i < network.size(); ++i) {
    const Json& r = network[i];
    const std::string where = Describe("network", i, PeekKey(r, false));
    NetworkOffer o;
    o.provider = RequireString(r, "provider", where);
    o.location = RequireString(r, "location", where);
    check_refs(where, o.Key());
    o.inbound_tiers = ParseTiers(Require(r, "inbound_tiers", where), ctx, where + " inbound");
    o.outbound_tiers = ParseTiers(Require(r, "outbound_tiers", where), ctx, where + " outbound");
    if (!seen.insert(o.Key()).second) {
      throw ValidationError(where, "duplicate network offer");
    }
    catalog.network_offers.push_back(std::move(o));
  }
  return catalog;
}

std::vector<ComputeOffer> FilterCompute(const Catalog& catalog, const ComputeFilter& filter) {
  std::vector<ComputeOffer> out;
  for (const ComputeOffer& o : catalog.compute_offers) {
    if (InSet(filter.providers, o.provider) && InSet(filter.locations, o.location) &&
        o.memory_gb >= filter.min_memory_gb && (!filter.max_memory_gb || o.memory_gb <= *filter.max_memory_gb)) {
      out.push_back(o);
    }
  }
  return out;
}

std::vector<StorageOffer> FilterStorage(const Catalog& catalog, const StorageFilter& filter) {
  std::vector<StorageOffer> out;
  for (const StorageOffer& o : catalog.storage_offers) {
    if (InSet(filter.providers, o.provider) && InSet(filter.locations, o.location) &&
        (!o.max_capacity_gb || filter.usage_gb <= *o.max_capacity_gb) && TiersCover(o.tiers, filter.usage_gb)) {
      out.push_back(o);
    }
  }
  return out;
}

std::vector<NetworkOffer> FilterNetwork(const Catalog& catalog, const NetworkFilter& filter) {
  std::vector<NetworkOffer> out;
  for (const NetworkOffer& o : catalog.network_offers) {
    if (InSet(filter.providers, o.provider) && InSet(filter.locations, o.location) &&
        TiersCover(o.inbound_tiers, filter.data_in_gb) && TiersCover(o.outbound_tiers, filter.data_out_gb)) {
      out.push_back(o);
    }
  }
  return out;
}

std::uint64_t CatalogStore::Import(std::string_view document) { return Publish(ParseCatalog(document)); }

std::uint64_t CatalogStore::Publish(Catalog catalog) {
  std::lock_guard lock(mutex_);
  catalog.version = ++last_version_;
  current_ = std::make_shared<const Catalog>(std::move(catalog));
  return current_->version;
}

std::shared_ptr<const Catalog> CatalogStore::Snapshot() const {
  std::lock_guard lock(mutex_);
  return current_;
}

}  // namespace cloudrank
