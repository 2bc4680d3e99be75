#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cloudrank/decimal.hpp"

namespace cloudrank {

struct Provider {
  std::string id;
  std::string display_name;
};

struct Location {
  std::string id;
  std::string display_name;
  double latitude = 0.0;
  double longitude = 0.0;
};

// One band of a block-declining price schedule. An empty quota_max_gb means the band is unbounded.
struct PriceTier {
  Decimal quota_min_gb;
  std::optional<Decimal> quota_max_gb;
  Decimal unit_price_per_gb;

  bool Bounded() const { return quota_max_gb.has_value(); }
};

// Identity of an offer inside a catalog. Network plans have no service name and use an empty string.
struct OfferKey {
  std::string provider;
  std::string location;
  std::string service_name;

  friend auto operator<=>(const OfferKey&, const OfferKey&) = default;
  friend bool operator==(const OfferKey&, const OfferKey&) = default;
};

struct ComputeOffer {
  std::string provider;
  std::string location;
  std::string service_name;
  Decimal memory_gb;
  int cpu_cores = 1;
  Decimal cpu_speed_ghz;
  Decimal disk_gb;
  Decimal price_per_hour;  // display currency

  OfferKey Key() const { return {provider, location, service_name}; }
};

struct StorageOffer {
  std::string provider;
  std::string location;
  std::string service_name;
  std::vector<PriceTier> tiers;
  std::optional<Decimal> max_capacity_gb;  // empty = unbounded

  OfferKey Key() const { return {provider, location, service_name}; }
};

struct NetworkOffer {
  std::string provider;
  std::string location;
  std::vector<PriceTier> inbound_tiers;
  std::vector<PriceTier> outbound_tiers;

  OfferKey Key() const { return {provider, location, ""}; }
};

// Immutable snapshot of providers, datacenter locations and offers. All prices are already converted to
// display_currency.
struct Catalog {
  std::uint64_t version = 0;
  std::string display_currency = "AUD";
  std::vector<Provider> providers;
  std::vector<Location> locations;
  std::vector<ComputeOffer> compute_offers;
  std::vector<StorageOffer> storage_offers;
  std::vector<NetworkOffer> network_offers;
  std::map<std::string, Decimal> exchange_rates;

  const Location* FindLocation(std::string_view id) const;
  const Provider* FindProvider(std::string_view id) const;
  std::size_t OfferCount() const { return compute_offers.size() + storage_offers.size() + network_offers.size(); }
};

/*
 * Parses and validates a catalog document. Throws ValidationError naming the offending record on any schema
 * violation, dangling provider/location reference, duplicate key or broken tier schedule. The returned catalog
 * has version 0; CatalogStore assigns versions on publication.
 */
Catalog ParseCatalog(std::string_view document);

// Checks the PriceTier invariants: contiguous from 0, strictly increasing, only the last band unbounded.
void ValidateTiers(const std::vector<PriceTier>& tiers, const std::string& where);

// Empty sets mean "all".
struct ComputeFilter {
  std::set<std::string> providers;
  std::set<std::string> locations;
  Decimal min_memory_gb;
  std::optional<Decimal> max_memory_gb;
};

struct StorageFilter {
  std::set<std::string> providers;
  std::set<std::string> locations;
  Decimal usage_gb;
};

struct NetworkFilter {
  std::set<std::string> providers;
  std::set<std::string> locations;
  Decimal data_in_gb;
  Decimal data_out_gb;
};

std::vector<ComputeOffer> FilterCompute(const Catalog& catalog, const ComputeFilter& filter);
// Keeps offers whose capacity and tier schedule can hold usage_gb.
std::vector<StorageOffer> FilterStorage(const Catalog& catalog, const StorageFilter& filter);
// Keeps plans whose inbound and outbound schedules can price the requested transfer volumes.
std::vector<NetworkOffer> FilterNetwork(const Catalog& catalog, const NetworkFilter& filter);

// Publishes catalog snapshots. Readers get a shared_ptr that stays valid across later imports.
class CatalogStore {
 public:
  // All-or-nothing: on failure the previous snapshot is untouched and the exception propagates.
  std::uint64_t Import(std::string_view document);
  std::uint64_t Publish(Catalog catalog);

  // nullptr until the first successful import.
  std::shared_ptr<const Catalog> Snapshot() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Catalog> current_;
  std::uint64_t last_version_ = 0;
};

}  // namespace cloudrank
