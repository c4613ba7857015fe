#include <doctest.h>

#include "memmarket/core.hpp"

using namespace mm;

TEST_SUITE("core") {

TEST_CASE("charge_for is exact with a single floor") {
  // 2000 micro-cents per GB*hour, one full GB for one hour
  CHECK(charge_for(Money{2000}, kPricingGB, Duration{kMillisPerHour}).micro_cents == 2000);
  // one slab for one hour: 2000 * 67108864 / 1e9 = 134.217728 -> 134
  CHECK(charge_for(Money{2000}, kSlabSize, Duration{kMillisPerHour}).micro_cents == 134);
  // sub-floor volumes floor to zero, not to garbage
  CHECK(charge_for(Money{1}, 1, Duration{1}).micro_cents == 0);
  // scaling is linear before the floor
  CHECK(charge_for(Money{4000}, kPricingGB, Duration{kMillisPerHour / 2}).micro_cents == 2000);
  CHECK_THROWS_AS(charge_for(Money{1}, 1, Duration{-1}), std::invalid_argument);
}

TEST_CASE("charge_for survives large magnitudes without overflow") {
  // 1 TB for 30 days at a high rate stays exact
  Money rate{1'000'000};
  ByteSize tb = 1000ull * kPricingGB;
  auto c = charge_for(rate, tb, Duration{30 * kMillisPerDay});
  CHECK(c.micro_cents == 1'000'000ll * 1000 * 30 * 24);
}

TEST_CASE("slabs_needed rounds up") {
  CHECK(slabs_needed(0, kSlabSize) == 0);
  CHECK(slabs_needed(1, kSlabSize) == 1);
  CHECK(slabs_needed(kSlabSize, kSlabSize) == 1);
  CHECK(slabs_needed(kSlabSize + 1, kSlabSize) == 2);
  CHECK_THROWS_AS(slabs_needed(1, 0), std::invalid_argument);
}

TEST_CASE("lease intervals are half-open") {
  Instant a{0}, b{10}, c{20};
  CHECK(!lease_overlaps(a, b, b, c));  // touching endpoints do not overlap
  CHECK(lease_overlaps(a, c, b, c));
  CHECK(!lease_overlaps(a, a, a, c));  // empty interval overlaps nothing
  CHECK_THROWS_AS(lease_overlaps(b, a, a, c), std::invalid_argument);
}

TEST_CASE("money ordering and arithmetic") {
  CHECK(Money{3} + Money{4} == Money{7});
  CHECK(Money{3} - Money{4} == Money{-1});
  CHECK(Money{3} < Money{4});
}

}  // TEST_SUITE
