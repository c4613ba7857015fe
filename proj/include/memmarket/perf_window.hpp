#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>

#include <ext/pb_ds/assoc_container.hpp>
#include <ext/pb_ds/tree_policy.hpp>

#include "memmarket/core.hpp"

namespace mm {

enum class MetricOrientation { HigherIsBetter, LowerIsBetter };

struct PerfSample {
  Instant at{};
  double metric = 0.0;
  bool had_page_in = false;
};

// Expiring ordered multiset of (metric, at). Order-statistics tree gives
// O(log n) insert and percentile; a deque in arrival order drives expiry
// (the feed is monotone in time).
class PerfWindow {
 public:
  explicit PerfWindow(Duration window_size) : window_size_(window_size) {}

  void insert(double metric, Instant at) {
    if (!std::isfinite(metric)) throw std::invalid_argument("metric must be finite");
    if (!arrivals_.empty() && at < arrivals_.back().first)
      throw std::invalid_argument("non-monotone sample time");
    tree_.insert({metric, seq_});
    arrivals_.push_back({at, {metric, seq_}});
    ++seq_;
    expire(at);
  }

  void expire(Instant now) {
    while (!arrivals_.empty() && arrivals_.front().first.ms <= now.ms - window_size_.ms) {
      tree_.erase(arrivals_.front().second);
      arrivals_.pop_front();
    }
  }

  std::size_t size() const { return tree_.size(); }
  bool empty() const { return tree_.empty(); }

  // k-th smallest, 1-indexed.
  double nth(std::size_t k) const {
    if (k < 1 || k > tree_.size()) throw std::out_of_range("rank out of range");
    return tree_.find_by_order(k - 1)->first;
  }

  // The value w such that 99% of samples are no worse than w. Rank is
  // ceil(0.99*n), 1-indexed, no interpolation; "worse" depends on
  // orientation (large latencies are bad, small throughputs are bad).
  double p99_worst(MetricOrientation orientation) const {
    if (empty()) throw std::runtime_error("p99 of empty window");
    std::size_t n = tree_.size();
    auto k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
    if (k < 1) k = 1;
    if (orientation == MetricOrientation::LowerIsBetter) return nth(k);
    return nth(n - k + 1);
  }

  // Most pessimal recorded value: max for latency-like metrics, min for
  // throughput-like ones.
  double worst_value(MetricOrientation orientation) const {
    if (empty()) throw std::runtime_error("worst of empty window");
    return orientation == MetricOrientation::LowerIsBetter ? nth(tree_.size()) : nth(1);
  }

 private:
  using Key = std::pair<double, std::uint64_t>;
  using Tree = __gnu_pbds::tree<Key, __gnu_pbds::null_type, std::less<Key>,
                                __gnu_pbds::rb_tree_tag,
                                __gnu_pbds::tree_order_statistics_node_update>;
  Duration window_size_;
  Tree tree_;
  std::deque<std::pair<Instant, Key>> arrivals_;
  std::uint64_t seq_ = 0;
};

}  // namespace mm
