#include "memmarket/harvester.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mm {

namespace {
constexpr double kAbsoluteEpsilon = 1e-9;

const char* mode_name(HarvestMode m) {
  return m == HarvestMode::Harvesting ? "harvesting" : "recovery";
}

const char* action_name(ActionKind k) {
  switch (k) {
    case ActionKind::Hold: return "hold";
    case ActionKind::Harvest: return "harvest";
    case ActionKind::Recover: return "recover";
  }
  return "?";
}
}  // namespace

void HarvesterConfig::validate() const {
  if (chunk_size == 0 || cooling_period.ms <= 0 || window_size.ms <= 0 || epoch.ms <= 0 ||
      severe_epochs == 0 || recovery_period.ms <= 0)
    throw std::invalid_argument("harvester config fields must be positive");
  if (!(p99_threshold > 0.0 && p99_threshold < 1.0))
    throw std::invalid_argument("p99_threshold must be in (0,1)");
}

Harvester::Harvester(HarvesterConfig cfg, ByteSize initial_limit, ByteSize initial_unallocated)
    : cfg_(cfg),
      initial_limit_(initial_limit),
      initial_unallocated_(initial_unallocated),
      baseline_(cfg.window_size),
      recent_(cfg.window_size) {
  cfg_.validate();
  state_.limit = initial_limit;
}

void Harvester::record_sample(PerfWindow& baseline, PerfWindow& recent, const PerfSample& s) {
  recent.insert(s.metric, s.at);
  if (!s.had_page_in) baseline.insert(s.metric, s.at);
  baseline.expire(s.at);
  recent.expire(s.at);
}

void Harvester::record_sample(const PerfSample& s) {
  if (s.at < last_sample_at_) throw std::invalid_argument("non-monotone sample time");
  record_sample(baseline_, recent_, s);
  last_sample_at_ = s.at;
  last_sample_ = s;
}

bool Harvester::detect_drop(double baseline_p99, double recent_p99, double threshold,
                            MetricOrientation orientation) {
  if (!std::isfinite(baseline_p99) || !std::isfinite(recent_p99))
    throw std::invalid_argument("p99 values must be finite");
  if (orientation == MetricOrientation::LowerIsBetter) {
    if (baseline_p99 == 0.0) return recent_p99 > kAbsoluteEpsilon;
    return recent_p99 > baseline_p99 * (1.0 + threshold);
  }
  if (baseline_p99 == 0.0) return recent_p99 < -kAbsoluteEpsilon;
  return recent_p99 < baseline_p99 * (1.0 - threshold);
}

bool Harvester::severe_this_epoch() const {
  if (!last_sample_ || baseline_.empty()) return false;
  double worst = baseline_.worst_value(cfg_.orientation);
  if (cfg_.orientation == MetricOrientation::LowerIsBetter)
    return last_sample_->metric > worst;
  return last_sample_->metric < worst;
}

Action Harvester::step(Instant now, bool silo_occupancy_grew) {
  Action action;

  // Severe-drop streak: strictly worse than every live baseline point.
  if (severe_this_epoch())
    ++state_.consecutive_severe;
  else
    state_.consecutive_severe = 0;
  if (state_.consecutive_severe >= cfg_.severe_epochs)
    action.prefetch_bytes = cfg_.chunk_size;

  auto hold = [&] { action.kind = ActionKind::Hold; };

  if (state_.mode == HarvestMode::Recovery) {
    if (now < state_.recovery_until) {
      hold();
      goto done;
    }
    state_.mode = HarvestMode::Harvesting;  // recovery expired, limit back on
  }

  if (baseline_.empty() || recent_.empty()) {
    hold();
    goto done;
  }

  if (detect_drop(baseline_.p99_worst(cfg_.orientation), recent_.p99_worst(cfg_.orientation),
                  cfg_.p99_threshold, cfg_.orientation)) {
    action.kind = ActionKind::Recover;
    state_.mode = HarvestMode::Recovery;
    state_.recovery_until = now + cfg_.recovery_period;
    ByteSize harvested_net =
        state_.total_harvested > state_.total_released
            ? state_.total_harvested - state_.total_released
            : 0;
    ByteSize release = std::min<ByteSize>(cfg_.chunk_size, harvested_net);
    if (state_.limit) state_.limit = std::min<ByteSize>(*state_.limit + release, initial_limit_);
    state_.total_released += release;
    action.released = release;
    // limit enforcement is off for the whole recovery period
    state_.limit.reset();
    goto done;
  }

  if ((now - state_.last_decrease).ms < cfg_.cooling_period.ms || silo_occupancy_grew) {
    hold();
    goto done;
  }

  if (!state_.limit) state_.limit = initial_limit_ - stats().total_harvested;
  if (*state_.limit < cfg_.chunk_size) {
    hold();  // never underflow the limit
    goto done;
  }
  action.kind = ActionKind::Harvest;
  action.harvested = cfg_.chunk_size;
  state_.limit = *state_.limit - cfg_.chunk_size;
  state_.last_decrease = now;
  state_.total_harvested += cfg_.chunk_size;

done:
  last_csv_ = std::to_string(now.ms) + "," + mode_name(state_.mode) + "," +
              (state_.limit ? std::to_string(*state_.limit) : "disabled") + "," +
              action_name(action.kind) +
              (action.prefetch_bytes ? "+prefetch" : "");
  return action;
}

HarvestStats Harvester::stats() const {
  HarvestStats st;
  st.total_harvested = state_.total_harvested > state_.total_released
                           ? state_.total_harvested - state_.total_released
                           : 0;
  if (st.total_harvested > 0 && st.total_harvested > initial_unallocated_)
    st.idle_fraction = static_cast<double>(st.total_harvested - initial_unallocated_) /
                       static_cast<double>(st.total_harvested);
  return st;
}

}  // namespace mm
