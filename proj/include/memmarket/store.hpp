#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "memmarket/core.hpp"

namespace mm {

// Standard token bucket over bytes; tokens tracked at millitoken resolution
// so refill at arbitrary millisecond deltas loses nothing.
class TokenBucket {
 public:
  TokenBucket(ByteSize rate_bytes_per_sec, ByteSize burst_bytes, Instant now)
      : rate_(rate_bytes_per_sec), burst_(burst_bytes), milli_tokens_(burst_bytes * 1000),
        last_refill_(now) {}

  enum class Admit { Allow, Deny };

  Admit admit(ByteSize io_size, Instant now);
  ByteSize tokens() const { return static_cast<ByteSize>(milli_tokens_ / 1000); }
  ByteSize rate() const { return rate_; }
  ByteSize burst() const { return burst_; }

 private:
  ByteSize rate_;
  ByteSize burst_;
  std::uint64_t milli_tokens_;
  Instant last_refill_;
};

struct StoreConfig {
  ByteSize capacity = kSlabSize;  // leased slabs x SlabSize
  std::uint32_t lru_sample_size = 5;
  ByteSize value_overhead = 0;  // per-entry metadata + allocator slack model
  std::uint64_t seed = 1;
};

struct StoreStats {
  std::uint64_t evictions = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
};

// Capacity-bounded KV store with Redis-style sampled-LRU eviction and a
// page-granular residency model (bump arena + per-page refcounts) that makes
// fragmentation and defrag observable without a real allocator.
class ProducerStore {
 public:
  explicit ProducerStore(StoreConfig cfg);

  // Insert or overwrite; evicts sampled-LRU victims until occupancy fits.
  // Returns evicted keys. Throws if the value alone exceeds capacity.
  std::vector<std::string> put(const std::string& key, std::vector<std::uint8_t> value,
                               Instant now);
  std::optional<std::vector<std::uint8_t>> get(const std::string& key, Instant now);
  bool erase(const std::string& key);
  bool contains(const std::string& key) const { return entries_.count(key) > 0; }

  // Evicts via sampled-LRU until at least `bytes` of occupancy are freed
  // (or the store is empty). Returns evicted keys.
  std::vector<std::string> evict_bytes(ByteSize bytes, std::vector<std::string>* out = nullptr);

  ByteSize occupancy() const { return occupancy_; }
  ByteSize resident() const { return live_pages_ * kPageSize; }
  std::size_t size() const { return entries_.size(); }
  const StoreConfig& config() const { return cfg_; }
  void set_capacity(ByteSize capacity) { cfg_.capacity = capacity; }
  const StoreStats& stats() const { return stats_; }

  ByteSize defragment();  // compacts the arena; returns resident bytes freed

  std::string csv_line(const std::string& store_id) const;

 private:
  struct Entry {
    std::vector<std::uint8_t> value;
    Instant last_access{};
    std::uint64_t access_seq = 0;  // tie-break so LRU order is total
    std::uint64_t arena_offset = 0;
    std::size_t key_slot = 0;  // index into keys_ for O(1) sampling
  };

  void touch_pages(std::uint64_t offset, std::size_t len, int delta);
  std::uint64_t arena_alloc(std::size_t len);
  void remove_entry(std::unordered_map<std::string, Entry>::iterator it);
  std::string pick_victim();
  ByteSize footprint(const Entry& e) const { return e.value.size() + cfg_.value_overhead; }

  StoreConfig cfg_;
  std::unordered_map<std::string, Entry> entries_;
  std::vector<std::string> keys_;  // sampling support
  std::unordered_map<std::uint64_t, std::uint32_t> page_refs_;
  std::uint64_t live_pages_ = 0;
  std::uint64_t arena_next_ = 0;
  ByteSize occupancy_ = 0;
  std::uint64_t access_counter_ = 0;
  std::mt19937_64 rng_;
  StoreStats stats_;
};

struct LeaseBinding {
  std::uint64_t lease_id = 0;
  std::uint64_t consumer_id = 0;
  std::uint32_t slabs = 0;
  Instant start{};
  Instant end{};
  std::string token;
  ByteSize bandwidth_limit = 0;  // bytes/s, 0 = unlimited
};

struct ReclaimReport {
  std::uint64_t lease_id = 0;
  std::vector<std::string> evicted_keys;
  std::uint32_t slabs_returned = 0;  // fully-emptied slabs back to the pool
};

// Owns one store per active lease plus the slab pool accounting.
class StoreManager {
 public:
  StoreManager(std::uint32_t total_slabs, std::uint64_t seed, Instant now)
      : total_slabs_(total_slabs), free_slabs_(total_slabs), seed_(seed), now_(now) {}

  ProducerStore& spawn_store(const LeaseBinding& lease);
  void terminate_store(std::uint64_t lease_id);

  ProducerStore* store_for(std::uint64_t lease_id);
  const LeaseBinding* lease_for(std::uint64_t lease_id) const;
  TokenBucket* bucket_for(std::uint64_t lease_id);

  // Proportional reclamation across stores, largest-remainder rounding.
  std::vector<ReclaimReport> reclaim(ByteSize total_bytes);

  std::uint32_t free_slabs() const { return free_slabs_; }
  std::uint32_t total_slabs() const { return total_slabs_; }
  void set_now(Instant now) { now_ = now; }
  std::vector<std::uint64_t> active_leases() const;

 private:
  struct Bound {
    LeaseBinding lease;
    ProducerStore store;
    std::optional<TokenBucket> bucket;
  };

  std::uint32_t total_slabs_;
  std::uint32_t free_slabs_;
  std::uint64_t seed_;
  Instant now_;
  std::map<std::uint64_t, Bound> stores_;
};

}  // namespace mm
