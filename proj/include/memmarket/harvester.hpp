#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memmarket/core.hpp"
#include "memmarket/perf_window.hpp"

namespace mm {

struct HarvesterConfig {
  ByteSize chunk_size = 64 * kMiB;
  Duration cooling_period{5 * kMillisPerMinute};
  Duration window_size{6 * kMillisPerHour};
  double p99_threshold = 0.01;
  Duration epoch{1 * kMillisPerSecond};
  std::uint32_t severe_epochs = 3;
  Duration recovery_period{60 * kMillisPerSecond};
  MetricOrientation orientation = MetricOrientation::LowerIsBetter;

  void validate() const;
};

enum class HarvestMode { Harvesting, Recovery };

enum class ActionKind { Hold, Harvest, Recover };

struct Action {
  ActionKind kind = ActionKind::Hold;
  ByteSize harvested = 0;        // Harvest only
  ByteSize released = 0;         // Recover only
  ByteSize prefetch_bytes = 0;   // nonzero when a severe drop asks for prefetch
};

struct HarvestState {
  HarvestMode mode = HarvestMode::Harvesting;
  Instant recovery_until{0};
  std::optional<ByteSize> limit;  // absent = limit disabled
  Instant last_decrease{-(1ll << 40)};
  std::uint32_t consecutive_severe = 0;
  // accounting
  ByteSize total_harvested = 0;
  ByteSize total_released = 0;
};

struct HarvestStats {
  ByteSize total_harvested = 0;  // net of releases
  double idle_fraction = 0.0;
};

// The per-epoch control loop deciding harvest / recover / hold / prefetch.
class Harvester {
 public:
  Harvester(HarvesterConfig cfg, ByteSize initial_limit, ByteSize initial_unallocated = 0);

  // Feeds one performance sample. Baseline only learns from page-in-free
  // epochs; the recent window takes everything.
  void record_sample(const PerfSample& s);

  // One decision per epoch; `silo_occupancy_grew` reports whether the silo
  // gained pages since the previous epoch.
  Action step(Instant now, bool silo_occupancy_grew);

  HarvestStats stats() const;
  const HarvestState& state() const { return state_; }
  const PerfWindow& baseline() const { return baseline_; }
  const PerfWindow& recent() const { return recent_; }

  // `epoch_ms,mode,limit_bytes,action` for the most recent step.
  std::string csv_line() const { return last_csv_; }

  static void record_sample(PerfWindow& baseline, PerfWindow& recent, const PerfSample& s);
  static bool detect_drop(double baseline_p99, double recent_p99, double threshold,
                          MetricOrientation orientation);

 private:
  bool severe_this_epoch() const;

  HarvesterConfig cfg_;
  HarvestState state_;
  ByteSize initial_limit_;
  ByteSize initial_unallocated_;
  PerfWindow baseline_;
  PerfWindow recent_;
  std::optional<PerfSample> last_sample_;
  Instant last_sample_at_{-(1ll << 60)};
  std::string last_csv_;
};

}  // namespace mm
