#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

// Shared vocabulary types and unit conventions.
//
// Unit conventions, fixed here and nowhere else:
//   - Money is an integer count of micro-cents (10^-6 cent). Rates are
//     micro-cents per GB*hour.
//   - "GB" in prices means 10^9 bytes. Slab sizes use MiB (2^20).
//   - Time is integer milliseconds since an epoch chosen by the clock owner.

namespace mm {

using ByteSize = std::uint64_t;
using MicroCents = std::int64_t;
using Millis = std::int64_t;

inline constexpr ByteSize kKiB = 1024;
inline constexpr ByteSize kMiB = 1024 * kKiB;
inline constexpr ByteSize kSlabSize = 64 * kMiB;
inline constexpr ByteSize kPageSize = 4 * kKiB;
inline constexpr ByteSize kPricingGB = 1000ull * 1000 * 1000;

inline constexpr Millis kMillisPerSecond = 1000;
inline constexpr Millis kMillisPerMinute = 60 * kMillisPerSecond;
inline constexpr Millis kMillisPerHour = 60 * kMillisPerMinute;
inline constexpr Millis kMillisPerDay = 24 * kMillisPerHour;

struct Instant {
  Millis ms = 0;
  friend auto operator<=>(const Instant&, const Instant&) = default;
};

struct Duration {
  Millis ms = 0;
  friend auto operator<=>(const Duration&, const Duration&) = default;
};

inline Instant operator+(Instant t, Duration d) { return {t.ms + d.ms}; }
inline Duration operator-(Instant a, Instant b) { return {a.ms - b.ms}; }
inline Duration operator+(Duration a, Duration b) { return {a.ms + b.ms}; }

// Non-negative integer currency. All pricing arithmetic goes through
// mul_gb_hours so rounding (floor per term) happens in exactly one place.
struct Money {
  MicroCents micro_cents = 0;

  friend auto operator<=>(const Money&, const Money&) = default;
  Money operator+(Money o) const { return {micro_cents + o.micro_cents}; }
  Money operator-(Money o) const { return {micro_cents - o.micro_cents}; }
};

// price (micro-cents / GB*hour) applied to a byte*millisecond volume.
// Exact in integers; single floor at the end.
inline Money charge_for(Money rate_per_gb_hour, ByteSize bytes, Duration held) {
  if (held.ms < 0) throw std::invalid_argument("negative duration");
  unsigned __int128 num = static_cast<unsigned __int128>(rate_per_gb_hour.micro_cents);
  num *= bytes;
  num *= static_cast<std::uint64_t>(held.ms);
  unsigned __int128 den =
      static_cast<unsigned __int128>(kPricingGB) * static_cast<std::uint64_t>(kMillisPerHour);
  return {static_cast<MicroCents>(num / den)};
}

struct PlacementWeights {
  double slabs = 1.0;
  double availability = 1.0;
  double bandwidth = 1.0;
  double cpu = 1.0;
  double latency = 1.0;
  double reputation = 1.0;

  double sum() const { return slabs + availability + bandwidth + cpu + latency + reputation; }
};

struct LeaseTerms {
  std::uint32_t slabs = 0;
  std::uint32_t min_slabs = 1;
  Duration duration{0};
  Money max_unit_price{0};  // per GB*hour; 0 = no budget cap
  PlacementWeights weights{};
  ByteSize bandwidth_limit = 0;  // bytes/sec; 0 = unlimited
  Duration latency_bound{0};     // 0 = no bound
};

struct Slab {
  std::uint64_t producer_id = 0;
  std::uint32_t slab_index = 0;
  ByteSize size = kSlabSize;
  std::uint64_t lease_id = 0;  // 0 = unleased
};

inline std::uint64_t slabs_needed(ByteSize bytes, ByteSize slab_size) {
  if (slab_size == 0) throw std::invalid_argument("slab_size must be positive");
  return (bytes + slab_size - 1) / slab_size;
}

// Intervals are half-open in spirit: touching endpoints do not overlap.
inline bool lease_overlaps(Instant a_start, Instant a_end, Instant b_start, Instant b_end) {
  if (a_start > a_end || b_start > b_end)
    throw std::invalid_argument("interval start must not exceed end");
  return a_start < b_end && b_start < a_end;
}

}  // namespace mm
