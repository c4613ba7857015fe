#include "memmarket/silo.hpp"

#include <stdexcept>

namespace mm {

std::int64_t SiloConfig::effective_read_latency_us() const {
  if (read_latency_us > 0) return read_latency_us;
  switch (backing) {
    case BackingKind::SSD: return 100;
    case BackingKind::HDD: return 5000;
    case BackingKind::ZRAM: return 3;
  }
  return 100;
}

std::int64_t SiloConfig::effective_write_latency_us() const {
  if (write_latency_us > 0) return write_latency_us;
  return effective_read_latency_us();
}

void Silo::swap_out(std::uint64_t page_id, Instant now) {
  if (pages_.count(page_id)) throw std::logic_error("page already swapped out");
  SiloPage p{page_id, kPageSize, now, PageLocation::InSilo};
  pages_.emplace(page_id, p);
  by_swap_time_silo_.emplace(std::make_pair(now.ms, page_id), page_id);
  stats_.silo_bytes += p.size;
  ++stats_.total_swap_outs;
}

SiloAccess Silo::access(std::uint64_t page_id, Instant now) {
  (void)now;
  auto it = pages_.find(page_id);
  if (it == pages_.end()) return {SiloAccess::NotTracked, 0};
  const SiloPage& p = it->second;
  SiloAccess result;
  if (p.location == PageLocation::InSilo) {
    by_swap_time_silo_.erase({p.swapped_out_at.ms, page_id});
    stats_.silo_bytes -= p.size;
    result = {SiloAccess::Silo, 0};
  } else {
    by_swap_time_disk_.erase({p.swapped_out_at.ms, page_id});
    stats_.disk_bytes -= p.size;
    ++stats_.disk_reads;
    result = {SiloAccess::Disk, cfg_.effective_read_latency_us()};
  }
  stats_.latency_total_us += result.latency_us;
  ++stats_.mapped_back;
  pages_.erase(it);
  return result;
}

std::uint64_t Silo::tick(Instant now) {
  std::uint64_t evicted = 0;
  // index is ordered by swap-out time, so the cold prefix is contiguous
  while (!by_swap_time_silo_.empty()) {
    auto it = by_swap_time_silo_.begin();
    Millis age = now.ms - it->first.first;
    if (age <= cfg_.cooling_period.ms) break;
    auto pit = pages_.find(it->second);
    pit->second.location = PageLocation::OnDisk;
    stats_.silo_bytes -= pit->second.size;
    stats_.disk_bytes += pit->second.size;
    ++stats_.disk_writes;
    stats_.latency_total_us += cfg_.effective_write_latency_us();
    by_swap_time_disk_.emplace(it->first, it->second);
    by_swap_time_silo_.erase(it);
    ++evicted;
  }
  return evicted;
}

std::uint64_t Silo::prefetch(ByteSize bytes) {
  std::uint64_t want = bytes / kPageSize;
  std::uint64_t restored = 0;
  // most recently swapped-out first
  while (restored < want && !by_swap_time_disk_.empty()) {
    auto it = std::prev(by_swap_time_disk_.end());
    auto pit = pages_.find(it->second);
    pit->second.location = PageLocation::InSilo;
    stats_.disk_bytes -= pit->second.size;
    stats_.silo_bytes += pit->second.size;
    ++stats_.disk_reads;
    stats_.latency_total_us += cfg_.effective_read_latency_us();
    by_swap_time_silo_.emplace(it->first, it->second);
    by_swap_time_disk_.erase(it);
    ++restored;
  }
  return restored;
}

ByteSize Silo::harvestable_reduction() const {
  if (cfg_.backing != BackingKind::ZRAM) return 0;
  return static_cast<ByteSize>(static_cast<double>(stats_.disk_bytes) * cfg_.capacity_factor);
}

std::string Silo::csv_line() const {
  return std::to_string(stats_.silo_bytes) + "," + std::to_string(stats_.disk_bytes) + "," +
         std::to_string(stats_.disk_reads) + "," + std::to_string(stats_.disk_writes);
}

}  // namespace mm
