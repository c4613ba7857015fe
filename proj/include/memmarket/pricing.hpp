#pragma once

#include <functional>
#include <string>
#include <vector>

#include "memmarket/core.hpp"

namespace mm {

struct SpotPricePoint {
  Instant at{};
  Money price_per_instance_hour{0};  // micro-cents per hour for the whole instance
  double instance_mem_gb = 0.0;
};

enum class PricingObjective { FixedFraction, MaxRevenue, MaxVolume };

struct PricingStrategy {
  PricingObjective objective = PricingObjective::MaxRevenue;
  double fraction = 0.25;           // FixedFraction only
  Money step{2000};                 // 0.002 cent/GB*hour
};

struct MarketObservation {
  Money price{0};
  double matched_gb_hours = 0.0;
  Money revenue{0};
};

// One quarter of the spot instance price, normalized per GB.
Money initial_price(const SpotPricePoint& spot);

// The per-GB*hour spot price; market prices are clamped to it after every step.
Money price_ceiling(const SpotPricePoint& spot);

// Objective value of a candidate price. matched_gb is demand actually
// servable at that price (already min'ed with supply by the caller).
struct CandidateOutcome {
  double matched_gb_hours = 0.0;
};
using PriceEvaluator = std::function<CandidateOutcome(Money price)>;

// Local search over {p - step, p, p + step}, clamped to [0, ceiling].
// MaxRevenue maximizes price*volume, MaxVolume maximizes volume, ties go to
// the lower price. FixedFraction ignores the evaluator and tracks the spot.
Money step_price(Money current, const PriceEvaluator& evaluate, const PricingStrategy& strategy,
                 const SpotPricePoint& spot);

double revenue_of(Money price, double matched_gb_hours);

// Spot price replay file: CSV timestamp_ms,price_micro_cents_per_hour,mem_gb
std::vector<SpotPricePoint> load_spot_series(const std::string& path);
std::vector<SpotPricePoint> parse_spot_series(const std::string& text);

}  // namespace mm
