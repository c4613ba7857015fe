#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>

#include "memmarket/core.hpp"

namespace mm {

enum class BackingKind { SSD, HDD, ZRAM };

// Backing latencies are calibration constants, kept in microseconds because
// SSD and ZRAM reads are sub-millisecond.
struct SiloConfig {
  Duration cooling_period{5 * kMillisPerMinute};
  BackingKind backing = BackingKind::SSD;
  std::int64_t read_latency_us = 0;   // 0 = default for the backing kind
  std::int64_t write_latency_us = 0;
  double capacity_factor = 0.5;  // ZRAM only: compressed footprint per byte

  std::int64_t effective_read_latency_us() const;
  std::int64_t effective_write_latency_us() const;
};

enum class PageLocation { InSilo, OnDisk };

struct SiloPage {
  std::uint64_t page_id = 0;
  ByteSize size = kPageSize;
  Instant swapped_out_at{};
  PageLocation location = PageLocation::InSilo;
};

struct SiloAccess {
  enum Where { Silo, Disk, NotTracked } where = NotTracked;
  std::int64_t latency_us = 0;
};

struct SiloStats {
  ByteSize silo_bytes = 0;
  ByteSize disk_bytes = 0;
  std::uint64_t disk_reads = 0;
  std::uint64_t disk_writes = 0;
  std::uint64_t mapped_back = 0;
  std::uint64_t total_swap_outs = 0;
  std::int64_t latency_total_us = 0;
};

// In-memory victim cache for reclaimed pages. Pages cool in RAM; cold ones
// move to the backing store; hot ones map back to the application on access.
class Silo {
 public:
  explicit Silo(SiloConfig cfg) : cfg_(cfg) {}

  void swap_out(std::uint64_t page_id, Instant now);
  SiloAccess access(std::uint64_t page_id, Instant now);
  std::uint64_t tick(Instant now);         // returns evicted count
  std::uint64_t prefetch(ByteSize bytes);  // returns pages restored

  const SiloStats& stats() const { return stats_; }
  ByteSize occupancy() const { return stats_.silo_bytes; }

  // With ZRAM backing the "disk" lives in compressed RAM, shrinking the
  // memory actually harvestable; zero for real disks.
  ByteSize harvestable_reduction() const;

  std::string csv_line() const;  // silo_bytes,disk_bytes,disk_reads,disk_writes

 private:
  SiloConfig cfg_;
  SiloStats stats_;
  std::unordered_map<std::uint64_t, SiloPage> pages_;
  // swap-out order index for cooling scans and most-recent-first prefetch
  std::map<std::pair<Millis, std::uint64_t>, std::uint64_t> by_swap_time_silo_;
  std::map<std::pair<Millis, std::uint64_t>, std::uint64_t> by_swap_time_disk_;
};

}  // namespace mm
