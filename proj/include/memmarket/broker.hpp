#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memmarket/arima.hpp"
#include "memmarket/core.hpp"

namespace mm {

// --- pure placement machinery (shared by the broker and by test oracles) ---

struct CandidateMetrics {
  std::uint64_t producer_id = 0;
  double slabs_available = 0.0;
  double predicted_availability = 0.0;  // slabs predicted free over the lease
  double bandwidth = 0.0;
  double cpu = 0.0;
  double latency_ms = 0.0;
  double reputation = 1.0;
};

// Weighted sum of min-max-normalized metrics; goodness metrics contribute
// 1 - norm, latency contributes norm. Degenerate spans map to 0.5. Lower
// cost is better.
std::vector<double> placement_costs(const std::vector<CandidateMetrics>& candidates,
                                    const PlacementWeights& weights);

// --- broker state ---

struct ProducerLedgerEntry {
  std::uint64_t producer_id = 0;
  std::string endpoint;
  std::uint32_t offered_slabs = 0;
  std::uint32_t leased_slabs = 0;
  TimeSeries usage_history;
  double available_bw = 0.0;   // bytes/s
  double available_cpu = 0.0;  // fraction of a core
  std::map<std::uint64_t, Duration> latency_to;  // consumer_id -> rtt
  // reputation = honored slab*time / leased slab*time, 1.0 with no history
  std::uint64_t leased_slab_ms = 0;
  std::uint64_t unhonored_slab_ms = 0;
  std::uint32_t next_slab_index = 0;

  double reputation() const {
    if (leased_slab_ms == 0) return 1.0;
    return static_cast<double>(leased_slab_ms - unhonored_slab_ms) /
           static_cast<double>(leased_slab_ms);
  }
};

struct AssignmentPart {
  std::uint64_t producer_id = 0;
  std::vector<std::uint32_t> slab_indices;
};

struct Assignment {
  std::uint64_t lease_id = 0;
  std::uint64_t consumer_id = 0;
  std::vector<AssignmentPart> parts;
  Instant start{};
  Instant end{};
  Money unit_price{0};

  std::uint32_t total_slabs() const {
    std::uint32_t n = 0;
    for (const auto& p : parts) n += static_cast<std::uint32_t>(p.slab_indices.size());
    return n;
  }
};

struct EvictionEvent {
  std::uint64_t producer_id = 0;
  std::uint32_t slabs = 0;
  Instant at{};
};

struct LeaseRecord {
  Assignment assignment;
  Duration requested_duration{0};
  std::vector<EvictionEvent> evictions;
  bool closed = false;
};

struct AllocationRequest {
  std::uint64_t consumer_id = 0;
  LeaseTerms terms;
};

struct PendingRequest {
  AllocationRequest request;
  std::uint32_t remaining_slabs = 0;
  std::uint32_t min_slabs = 1;  // already-satisfied remainders retry with 1
  Instant enqueued_at{};
  Duration timeout{10 * kMillisPerMinute};
};

struct AllocateResult {
  enum class Kind { Assigned, Queued, Rejected } kind = Kind::Rejected;
  std::optional<Assignment> assignment;
  std::string reason;
};

struct Bill {
  Money charge{0};
  Money rebate{0};
  Money total{0};  // charge + unserved value; conservation anchor
};

struct BrokerConfig {
  Duration queue_timeout{10 * kMillisPerMinute};
  Duration renew_grace{1 * kMillisPerMinute};
  double rebate_rate = 1.0;
  ByteSize slab_size = kSlabSize;
};

// Single-node matchmaker: registration, availability ledger, greedy weighted
// placement with a non-blocking FIFO pending queue, reputation, billing.
// All commands are expected to arrive on one logical event stream.
class Broker {
 public:
  explicit Broker(BrokerConfig cfg = {}) : cfg_(cfg) {}

  std::uint64_t register_producer(const std::string& endpoint, std::uint32_t offered_slabs);
  std::uint64_t register_consumer(const std::string& endpoint);
  void deregister(std::uint64_t id);

  void report_usage(std::uint64_t producer_id, double free_gb, double bw, double cpu,
                    Instant at);
  void set_latency(std::uint64_t producer_id, std::uint64_t consumer_id, Duration rtt);

  AllocateResult allocate(const AllocationRequest& request, Instant now);
  std::vector<Assignment> tick_queue(Instant now);

  void record_eviction(std::uint64_t lease_id, std::uint64_t producer_id, std::uint32_t slabs,
                       Instant at);

  Bill bill_lease(std::uint64_t lease_id) const;
  static Bill bill(const LeaseRecord& lease, Money unit_price, double rebate_rate,
                   ByteSize slab_size);

  AllocateResult renew(std::uint64_t lease_id, Instant now);
  void close_lease(std::uint64_t lease_id);  // lease ran to completion

  Money current_price() const { return current_price_; }
  void set_current_price(Money p) { current_price_ = p; }

  const ProducerLedgerEntry* producer(std::uint64_t id) const;
  double producer_reputation(std::uint64_t id) const;
  const LeaseRecord* lease(std::uint64_t id) const;
  std::size_t queue_depth() const { return queue_.size(); }
  std::vector<std::uint64_t> producer_ids() const;
  std::uint32_t free_slabs(std::uint64_t producer_id) const;

  // Predicted free slabs at a producer over a lease horizon (ARIMA-backed,
  // naive fallback); public so the simulator can reuse it.
  double predicted_free_slabs(std::uint64_t producer_id, Duration lease, Instant now);

  // crash-recovery snapshot, versioned JSON
  std::string snapshot() const;
  void save_snapshot(const std::string& path) const;

 private:
  struct TryResult {
    std::vector<AssignmentPart> parts;
    std::uint32_t assigned = 0;
  };
  TryResult try_assign(const AllocationRequest& request, std::uint32_t want, Instant now);
  AllocateResult queue_request(const AllocationRequest& request, std::uint32_t slabs,
                               std::uint32_t min_slabs, Instant now);
  void commit_parts(const std::vector<AssignmentPart>& parts);
  Assignment finish_assignment(const AllocationRequest& request, TryResult&& tr, Instant now);

  BrokerConfig cfg_;
  std::uint64_t next_id_ = 1;
  std::uint64_t next_lease_id_ = 1;
  std::map<std::uint64_t, ProducerLedgerEntry> producers_;
  std::map<std::uint64_t, std::string> consumers_;
  std::map<std::string, std::uint64_t> endpoints_;
  std::map<std::uint64_t, LeaseRecord> leases_;
  std::map<std::uint64_t, AvailabilityPredictor> predictors_;
  std::deque<PendingRequest> queue_;
  Money current_price_{0};
};

}  // namespace mm
