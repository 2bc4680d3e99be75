#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "cloudrank/catalog.hpp"
#include "cloudrank/decimal.hpp"

namespace cloudrank {

// Estimated consumption over one billing period. Every quantity is interpreted against the same period.
struct UsageEstimate {
  std::int64_t compute_instances = 1;
  Decimal compute_hours = Decimal::FromInteger(720);
  Decimal storage_gb;
  Decimal data_in_gb = Decimal::FromInteger(1);
  Decimal data_out_gb;
  std::string period_label = "30 days";

  // A resource kind with zero usage is left out of the combination entirely. Network is always priced.
  bool UsesCompute() const { return compute_instances > 0; }
  bool UsesStorage() const { return !storage_gb.IsZero(); }
};

// Throws ValidationError when a quantity is negative.
void ValidateUsage(const UsageEstimate& usage);

struct CostBreakdown {
  Decimal compute_cost;
  Decimal storage_cost;
  Decimal network_cost;
  Decimal total;
  bool compute_present = false;
  bool storage_present = false;
};

// usage * price, rounded half-even to six fractional digits.
Decimal UnitCost(Decimal usage_amount, Decimal unit_price);

// usage * price * duration with a single rounding.
Decimal PeriodCost(Decimal usage_amount, Decimal unit_price, Decimal duration);

/*
 * Block-declining price for `usage_gb`: every band bills only the part of the usage that falls inside it, at its
 * own rate. Returns nullopt when the usage exceeds the upper bound of the last (bounded) band, i.e. the offer cannot
 * hold that much.
 */
std::optional<Decimal> TieredCost(std::span<const PriceTier> tiers, Decimal usage_gb);

// Storage/compute may be null when the usage for that kind is zero. Returns nullopt if any schedule is infeasible.
std::optional<CostBreakdown> TotalCost(const ComputeOffer* compute, const StorageOffer* storage,
                                       const NetworkOffer& network, const UsageEstimate& usage);

}  // namespace cloudrank
