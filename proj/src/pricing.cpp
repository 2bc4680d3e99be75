#include "cloudrank/pricing.hpp"

#include <stdexcept>

#include "cloudrank/errors.hpp"

namespace cloudrank {

namespace {

void RequireNonNegative(Decimal value, const char* what) {
  if (value.IsNegative()) {
    throw ValidationError(what, "must be nonnegative, got " + value.ToString());
  }
}

}  // namespace

void ValidateUsage(const UsageEstimate& usage) {
  if (usage.compute_instances < 0) {
    throw ValidationError("usage.compute_instances", "must be nonnegative");
  }
  RequireNonNegative(usage.compute_hours, "usage.compute_hours");
  RequireNonNegative(usage.storage_gb, "usage.storage_gb");
  RequireNonNegative(usage.data_in_gb, "usage.data_in_gb");
  RequireNonNegative(usage.data_out_gb, "usage.data_out_gb");
}

Decimal UnitCost(Decimal usage_amount, Decimal unit_price) {
  RequireNonNegative(usage_amount, "usage_amount");
  RequireNonNegative(unit_price, "unit_price");
  return usage_amount * unit_price;
}

Decimal PeriodCost(Decimal usage_amount, Decimal unit_price, Decimal duration) {
  RequireNonNegative(usage_amount, "usage_amount");
  RequireNonNegative(unit_price, "unit_price");
  RequireNonNegative(duration, "duration");
  return MultiplyRounded(usage_amount, unit_price, duration);
}

std::optional<Decimal> TieredCost(std::span<const PriceTier> tiers, Decimal usage_gb) {
  RequireNonNegative(usage_gb, "usage_gb");
  if (tiers.empty()) {
    throw std::invalid_argument("tiered cost over an empty schedule");
  }
  const PriceTier& last = tiers.back();
  if (last.Bounded() && usage_gb > *last.quota_max_gb) {
    return std::nullopt;
  }
  Decimal cost;
  for (const PriceTier& tier : tiers) {
    if (usage_gb <= tier.quota_min_gb) {
      break;
    }
    const Decimal upper = tier.Bounded() ? Min(usage_gb, *tier.quota_max_gb) : usage_gb;
    cost += (upper - tier.quota_min_gb) * tier.unit_price_per_gb;
  }
  return cost;
}

std::optional<CostBreakdown> TotalCost(const ComputeOffer* compute, const StorageOffer* storage,
                                       const NetworkOffer& network, const UsageEstimate& usage) {
  ValidateUsage(usage);
  CostBreakdown out;
  if (usage.UsesCompute()) {
    if (compute == nullptr) {
      throw std::invalid_argument("compute usage given without a compute offer");
    }
    out.compute_present = true;
    out.compute_cost =
        PeriodCost(Decimal::FromInteger(usage.compute_instances), compute->price_per_hour, usage.compute_hours);
  }
  if (usage.UsesStorage()) {
    if (storage == nullptr) {
      throw std::invalid_argument("storage usage given without a storage offer");
    }
    if (storage->max_capacity_gb && usage.storage_gb > *storage->max_capacity_gb) {
      return std::nullopt;
    }
    const auto cost = TieredCost(storage->tiers, usage.storage_gb);
    if (!cost) {
      return std::nullopt;
    }
    out.storage_present = true;
    out.storage_cost = *cost;
  }
  const auto outbound = TieredCost(network.outbound_tiers, usage.data_out_gb);
  const auto inbound = TieredCost(network.inbound_tiers, usage.data_in_gb);
  if (!outbound || !inbound) {
    return std::nullopt;
  }
  out.network_cost = *outbound + *inbound;
  out.total = out.compute_cost + out.storage_cost + out.network_cost;
  return out;
}

}  // namespace cloudrank
