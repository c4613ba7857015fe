#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memmarket/core.hpp"
#include "memmarket/crypto.hpp"
#include "memmarket/mrc.hpp"

namespace mm {

enum class SecurityMode { Full, IntegrityOnly, Plain };

// Per-entry local index cost under the paper-style accounting: the producer
// table index is amortized, so Full = counter key + truncated hash.
inline constexpr std::size_t metadata_overhead_bytes(SecurityMode m) {
  switch (m) {
    case SecurityMode::Full: return 8 + crypto::kHashBytes;       // 24
    case SecurityMode::IntegrityOnly: return crypto::kHashBytes;  // 16
    case SecurityMode::Plain: return 0;
  }
  return 0;
}

struct MetadataEntry {
  std::uint64_t substitute_key = 0;  // Full mode counter key
  crypto::TruncatedHash hash{};      // Full + IntegrityOnly
  std::uint16_t producer_index = 0;
};

// Transport to one leased producer store. The in-process test double and the
// TCP client both implement this.
class RemoteStore {
 public:
  enum class Status { Ok, NotFound, Evicted, RateLimited, LeaseExpired, Error };

  virtual ~RemoteStore() = default;
  virtual Status put(const std::string& key, std::span<const std::uint8_t> value,
                     std::uint32_t* retry_after_ms) = 0;
  virtual Status get(const std::string& key, std::vector<std::uint8_t>* value,
                     std::uint32_t* retry_after_ms) = 0;
  virtual Status del(const std::string& key) = 0;
};

struct GetResult {
  enum class Outcome { Found, NotFound, IntegrityViolation } outcome = Outcome::NotFound;
  std::vector<std::uint8_t> value;
};

enum class PutStatus { Ok, NoCapacity, RateLimited };

// Consumer-side secure KV layer: encrypt-then-hash values, substitute
// counter keys, verify on the way back.
class SecureKvClient {
 public:
  SecureKvClient(SecurityMode mode, crypto::SecretKey secret)
      : mode_(mode), secret_(secret) {}

  // Producer table slot; returns the index used as p_i in metadata.
  std::uint16_t add_producer(std::shared_ptr<RemoteStore> store);

  PutStatus put(const std::string& key, std::span<const std::uint8_t> value,
                std::uint32_t* retry_after_ms = nullptr);
  GetResult get(const std::string& key);
  void del(const std::string& key);  // idempotent; remote half is best-effort

  SecurityMode mode() const { return mode_; }
  std::size_t index_size() const;
  std::size_t local_overhead_per_entry() const { return metadata_overhead_bytes(mode_); }
  std::vector<std::string> keys() const;  // local-key iteration (range scans)
  std::uint64_t next_counter() const { return counter_.load(); }

 private:
  std::string remote_key(const MetadataEntry& e, const std::string& consumer_key) const;

  SecurityMode mode_;
  crypto::SecretKey secret_;
  std::vector<std::shared_ptr<RemoteStore>> producers_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, MetadataEntry> index_;
  std::atomic<std::uint64_t> counter_{1};
  std::atomic<std::uint16_t> next_producer_{0};
};

// --- purchasing strategy ---

// Hourly value of `extra_gb` on top of `current_gb`, via the price-per-hit
// the consumer already pays implicitly by running its VM.
Money value_of_memory(const MissRatioCurve& mrc, double current_gb, double extra_gb,
                      Money vm_cost_per_hour, double request_rate_per_sec,
                      double remote_hit_discount);

// Largest lease (slab-size GB increments) whose every increment is worth at
// least its hourly market cost. Zero when even the first increment fails.
double purchase_decision(const MissRatioCurve& mrc, Money market_price_per_gb_hour,
                         double current_gb, Money vm_cost_per_hour,
                         double request_rate_per_sec, double remote_hit_discount,
                         ByteSize slab_size = kSlabSize);

}  // namespace mm
