#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "memmarket/silo.hpp"

using namespace mm;

namespace {

void check_conservation(const Silo& s, std::uint64_t tracked_pages) {
  const auto& st = s.stats();
  CHECK(st.silo_bytes + st.disk_bytes == tracked_pages * kPageSize);
  CHECK(st.mapped_back + tracked_pages == st.total_swap_outs);
}

}  // namespace

TEST_SUITE("silo") {

TEST_CASE("pages within the cooling period always map back from memory") {
  Silo s(SiloConfig{});
  s.swap_out(1, Instant{0});
  s.tick(Instant{5 * kMillisPerMinute});  // exactly cooling-old: still in memory
  auto a = s.access(1, Instant{5 * kMillisPerMinute});
  CHECK(a.where == SiloAccess::Silo);
  CHECK(a.latency_us == 0);
  CHECK(s.stats().disk_reads == 0);
}

TEST_CASE("cold pages move to the backing store and read back with latency") {
  Silo s(SiloConfig{});  // SSD default: 100 us reads
  s.swap_out(1, Instant{0});
  CHECK(s.tick(Instant{5 * kMillisPerMinute + 1}) == 1);
  auto a = s.access(1, Instant{6 * kMillisPerMinute});
  CHECK(a.where == SiloAccess::Disk);
  CHECK(a.latency_us == 100);
  CHECK(s.stats().disk_reads == 1);
  CHECK(s.stats().disk_writes == 1);
}

TEST_CASE("backing latencies default per kind") {
  CHECK(SiloConfig{.backing = BackingKind::SSD}.effective_read_latency_us() == 100);
  CHECK(SiloConfig{.backing = BackingKind::HDD}.effective_read_latency_us() == 5000);
  CHECK(SiloConfig{.backing = BackingKind::ZRAM}.effective_read_latency_us() == 3);
  CHECK(SiloConfig{.read_latency_us = 7}.effective_read_latency_us() == 7);
}

TEST_CASE("duplicate swap-out is a logic error") {
  Silo s(SiloConfig{});
  s.swap_out(1, Instant{0});
  CHECK_THROWS_AS(s.swap_out(1, Instant{1}), std::logic_error);
}

TEST_CASE("untracked accesses are reported as such") {
  Silo s(SiloConfig{});
  CHECK(s.access(42, Instant{0}).where == SiloAccess::NotTracked);
}

TEST_CASE("prefetch restores exactly the most recently swapped-out pages") {
  Silo s(SiloConfig{});
  // 20 pages at distinct times; oracle = the sort by swap-out time
  for (std::uint64_t i = 0; i < 20; ++i)
    s.swap_out(100 + i, Instant{static_cast<Millis>(i * 1000)});
  s.tick(Instant{kMillisPerHour});  // everything cools to disk
  CHECK(s.stats().disk_bytes == 20 * kPageSize);

  CHECK(s.prefetch(5 * kPageSize) == 5);
  // the five newest (ids 115..119) are in memory again, the rest on disk
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto a = s.access(100 + i, Instant{kMillisPerHour});
    CHECK(a.where == (i >= 15 ? SiloAccess::Silo : SiloAccess::Disk));
  }
  // partial-page byte counts floor to whole pages
  Silo s2(SiloConfig{});
  s2.swap_out(1, Instant{0});
  s2.tick(Instant{kMillisPerHour});
  CHECK(s2.prefetch(kPageSize - 1) == 0);
}

TEST_CASE("zram backing shrinks harvestable memory; real disks do not") {
  SiloConfig zram;
  zram.backing = BackingKind::ZRAM;
  zram.capacity_factor = 0.5;
  Silo s(zram);
  s.swap_out(1, Instant{0});
  s.swap_out(2, Instant{0});
  CHECK(s.harvestable_reduction() == 0);  // nothing on "disk" yet
  s.tick(Instant{kMillisPerHour});
  CHECK(s.harvestable_reduction() == kPageSize);  // 2 pages * 0.5

  Silo ssd(SiloConfig{});
  ssd.swap_out(1, Instant{0});
  ssd.tick(Instant{kMillisPerHour});
  CHECK(ssd.harvestable_reduction() == 0);
}

TEST_CASE("csv ledger line") {
  Silo s(SiloConfig{});
  s.swap_out(1, Instant{0});
  CHECK(s.csv_line() == std::to_string(kPageSize) + ",0,0,0");
}

TEST_CASE("randomized schedules: recent accesses never touch the disk") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Silo s(SiloConfig{});
    std::map<std::uint64_t, Millis> out_at;  // currently tracked pages
    std::uint64_t next_page = 1;
    Millis now = 0;
    for (int step = 0; step < 2000; ++step) {
      now += std::uniform_int_distribution<Millis>(1, 30'000)(rng);
      int op = std::uniform_int_distribution<int>(0, 2)(rng);
      if (op == 0 || out_at.empty()) {
        s.swap_out(next_page, Instant{now});
        out_at[next_page] = now;
        ++next_page;
      } else if (op == 1) {
        auto it = out_at.begin();
        std::advance(it, std::uniform_int_distribution<std::size_t>(0, out_at.size() - 1)(rng));
        auto a = s.access(it->first, Instant{now});
        if (now - it->second <= 5 * kMillisPerMinute) {
          // the zero-disk-read guarantee
          CHECK(a.where == SiloAccess::Silo);
          CHECK(a.latency_us == 0);
        }
        out_at.erase(it);
      } else {
        s.tick(Instant{now});
      }
      check_conservation(s, out_at.size());
    }
  }
}

}  // TEST_SUITE
