#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "memmarket/broker.hpp"
#include "memmarket/core.hpp"
#include "memmarket/mrc.hpp"
#include "memmarket/pricing.hpp"

// Deterministic single-threaded market simulator: replays a cluster trace,
// drives the broker/pricing/harvester modules, and emits per-tick metrics.

namespace mm::sim {

// --- traces ---

struct TraceRow {
  Instant at{};
  std::uint64_t machine_id = 0;
  double mem_capacity_gb = 0.0;
  double mem_used_gb = 0.0;  // demand; may exceed capacity (unmet demand)
  double cpu_used_frac = 0.0;
  double bw_used_frac = 0.0;
};

struct ClusterTrace {
  std::vector<TraceRow> rows;  // sorted by (at, machine_id)

  std::vector<std::uint64_t> machine_ids() const;
  std::vector<Instant> tick_times() const;
  bool empty() const { return rows.empty(); }
};

// CSV: timestamp_ms,machine_id,mem_capacity_gb,mem_used_gb,cpu_used_frac,bw_used_frac
// unit_gb > 0 rescales the memory columns (trace files measured in abstract
// units; e.g. pass 5.0 when one trace unit means 5 GB).
ClusterTrace parse_trace(const std::string& text, double unit_gb = 0.0);
ClusterTrace load_trace(const std::string& path, double unit_gb = 0.0);
std::string trace_csv(const ClusterTrace& trace);

struct SynthTraceConfig {
  int producers = 20;
  int consumers = 50;
  Duration duration{48 * kMillisPerHour};
  Duration tick{5 * kMillisPerMinute};
  std::uint64_t seed = 42;
  double producer_capacity_gb = 64.0;
  double consumer_capacity_gb = 16.0;
};

// Diurnal sinusoid + noise + occasional bursts; same schema as real traces.
ClusterTrace make_synthetic_trace(const SynthTraceConfig& cfg);

// --- role classification ---

struct Classification {
  std::vector<std::uint64_t> producers;  // min usage >= producer_min_frac
  std::vector<std::uint64_t> consumers;  // any tick with demand > capacity
  std::vector<std::uint64_t> idle;
};

// Throws std::invalid_argument on an empty trace. A machine that both stays
// above the floor and overflows its capacity counts as a consumer.
Classification classify_machines(const ClusterTrace& trace, double producer_min_frac = 0.4);

// --- simulation ---

enum class DemandSource {
  Excess,  // request ceil(excess / slab) when demand exceeds capacity
  Mrc,     // request what the miss-ratio-curve purchase rule buys at the price
};

struct SimConfig {
  std::uint64_t seed = 1;
  Duration tick{5 * kMillisPerMinute};
  double consumer_capacity_gb = 512.0;
  Duration min_lease{10 * kMillisPerMinute};
  Duration lease_duration{30 * kMillisPerMinute};
  double producer_min_frac = 0.4;
  PricingStrategy strategy{};
  DemandSource demand = DemandSource::Mrc;
  bool market_enabled = true;
  bool compute_oracle = false;
  std::vector<SpotPricePoint> spot;     // empty -> one constant default point
  std::vector<MissRatioCurve> mrcs;     // assigned per consumer by seed; empty -> synthetic
  Money vm_cost_per_hour{5'000'000};    // 5 cents/hour
  double base_request_rate = 2000.0;    // req/s at full pressure
  double remote_hit_discount = 0.8;
  Money initial_price{0};               // 0 -> quarter of the spot ceiling
};

struct TickMetrics {
  Instant at{};
  Money price{0};
  double trading_volume_gb = 0.0;  // leased GB active at tick end
  Money producer_revenue{0};       // accrued this tick
  double cluster_utilization = 0.0;
  double baseline_utilization = 0.0;  // without the market
  double mean_consumer_hit_ratio = 0.0;
  double satisfied_request_fraction = 1.0;  // cumulative; vacuously 1
  double revoked_slab_fraction = 0.0;       // cumulative
  Money oracle_price{0};  // only when compute_oracle
};

struct SimResult {
  std::vector<TickMetrics> ticks;
  Money total_revenue{0};
  double mean_volume_gb = 0.0;
  double mean_utilization = 0.0;
  double mean_baseline_utilization = 0.0;
  double satisfied_request_fraction = 1.0;
  double revoked_slab_fraction = 0.0;
  double mean_price_deviation = 0.0;  // mean |p - p*|/p* where p* > 0

  std::string metrics_csv() const;
};

SimResult run(const ClusterTrace& trace, const SimConfig& cfg);

// Brute-force revenue-optimal price per tick over a grid with the pricing
// step as resolution; shares the demand model with run().
std::vector<Money> price_oracle(const ClusterTrace& trace, const SimConfig& cfg);

struct StrategyRow {
  std::string name;
  SimResult result;
};

std::string strategy_name(const PricingStrategy& s);
std::vector<StrategyRow> compare_strategies(const ClusterTrace& trace, const SimConfig& cfg,
                                            const std::vector<PricingStrategy>& strategies);
std::string compare_csv(const std::vector<StrategyRow>& rows);

// Seeded family of concave miss-ratio curves for consumers without real MRCs.
std::vector<MissRatioCurve> synthetic_mrcs(std::size_t n, std::uint64_t seed);

std::string run_manifest_json(const SimConfig& cfg, const std::string& trace_desc);

}  // namespace mm::sim
