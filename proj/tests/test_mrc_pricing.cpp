#include <doctest.h>

#include <cmath>
#include <random>

#include "memmarket/mrc.hpp"
#include "memmarket/pricing.hpp"

using namespace mm;

namespace {

const SpotPricePoint kSpot{Instant{0}, Money{1'600'000}, 8.0};

// grid oracle: exhaustive argmax of revenue at step resolution over [0, ceiling]
Money grid_best_revenue(const PriceEvaluator& eval, Money step, Money ceiling) {
  Money best{0};
  double best_score = -1.0;
  for (MicroCents p = 0; p <= ceiling.micro_cents; p += step.micro_cents) {
    double score = revenue_of(Money{p}, eval(Money{p}).matched_gb_hours);
    if (score > best_score) {
      best_score = score;
      best = Money{p};
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("mrc_pricing") {

TEST_CASE("mrc validation rejects malformed knot lists") {
  CHECK_THROWS_AS(MissRatioCurve({}), std::invalid_argument);
  CHECK_THROWS_AS(MissRatioCurve({{0.0, 1.2}}), std::invalid_argument);
  CHECK_THROWS_AS(MissRatioCurve({{1.0, 0.5}, {1.0, 0.4}}), std::invalid_argument);
  CHECK_THROWS_AS(MissRatioCurve({{0.0, 0.4}, {1.0, 0.5}}), std::invalid_argument);
  CHECK_NOTHROW(MissRatioCurve({{0.0, 0.5}, {1.0, 0.5}}));  // flat is allowed
}

TEST_CASE("mrc interpolation is linear and clamped") {
  MissRatioCurve mrc({{1.0, 0.8}, {3.0, 0.4}, {5.0, 0.1}});
  CHECK(mrc.miss_at(0.0) == 0.8);   // clamp left
  CHECK(mrc.miss_at(1.0) == 0.8);
  CHECK(mrc.miss_at(2.0) == doctest::Approx(0.6));
  CHECK(mrc.miss_at(4.0) == doctest::Approx(0.25));
  CHECK(mrc.miss_at(5.0) == 0.1);
  CHECK(mrc.miss_at(99.0) == 0.1);  // clamp right
  CHECK(mrc.max_gb() == 5.0);
}

TEST_CASE("mrc csv parsing skips headers and comments") {
  auto mrc = MissRatioCurve::from_csv_text(
      "# trace 7\ncache_gb,miss_ratio\n0,0.9\n2,0.5\n4,0.2\n");
  REQUIRE(mrc.knots().size() == 3);
  CHECK(mrc.miss_at(3.0) == doctest::Approx(0.35));
  CHECK_THROWS_AS(MissRatioCurve::from_csv("/nonexistent/m.csv"), std::runtime_error);
}

TEST_CASE("initial price and ceiling derive from the spot instance") {
  // 1'600'000 micro-cents/hour over 8 GB -> 200'000 per GB*hour ceiling,
  // a quarter of it to start
  CHECK(price_ceiling(kSpot) == Money{200'000});
  CHECK(initial_price(kSpot) == Money{50'000});
  CHECK_THROWS_AS(initial_price(SpotPricePoint{}), std::invalid_argument);
}

TEST_CASE("fixed-fraction pricing tracks the spot and ignores the market") {
  PricingStrategy s;
  s.objective = PricingObjective::FixedFraction;
  s.fraction = 0.25;
  auto never = [](Money) -> CandidateOutcome { throw std::logic_error("must not evaluate"); };
  CHECK(step_price(Money{0}, never, s, kSpot) == Money{50'000});
  s.fraction = 2.0;  // clamped at the ceiling
  CHECK(step_price(Money{0}, never, s, kSpot) == Money{200'000});
}

TEST_CASE("max-revenue search converges to the grid argmax on linear demand") {
  std::mt19937_64 rng(51);
  PricingStrategy s;  // MaxRevenue, step 2000
  Money ceiling = price_ceiling(kSpot);
  for (int trial = 0; trial < 10; ++trial) {
    // demand(p) = d0 * max(0, 1 - p/p_zero): revenue is unimodal in p
    double d0 = std::uniform_real_distribution<double>(10.0, 500.0)(rng);
    double p_zero = std::uniform_real_distribution<double>(40'000.0, 400'000.0)(rng);
    double supply = std::uniform_real_distribution<double>(d0 / 2, d0 * 2)(rng);
    PriceEvaluator eval = [&](Money p) {
      double demand = d0 * std::max(0.0, 1.0 - static_cast<double>(p.micro_cents) / p_zero);
      return CandidateOutcome{std::min(demand, supply)};
    };
    Money oracle = grid_best_revenue(eval, s.step, ceiling);
    Money p = Money{std::uniform_int_distribution<MicroCents>(0, 100)(rng) * 2000};
    for (int i = 0; i < 150; ++i) p = step_price(p, eval, s, kSpot);
    CHECK(p == oracle);
    // and once there, it stays
    CHECK(step_price(p, eval, s, kSpot) == oracle);
  }
}

TEST_CASE("max-volume pricing decays toward zero under a volume tie") {
  PricingStrategy s;
  s.objective = PricingObjective::MaxVolume;
  PriceEvaluator flat = [](Money) { return CandidateOutcome{10.0}; };
  // all three candidates match the same volume: lower price wins the tie
  CHECK(step_price(Money{50'000}, flat, s, kSpot) == Money{48'000});
  CHECK(step_price(Money{1'000}, flat, s, kSpot) == Money{0});
  CHECK(step_price(Money{0}, flat, s, kSpot) == Money{0});
}

TEST_CASE("stepped prices never leave the [0, ceiling] band") {
  PricingStrategy s;
  PriceEvaluator greedy = [](Money p) {
    return CandidateOutcome{static_cast<double>(p.micro_cents)};  // higher is always better
  };
  Money p{199'000};
  for (int i = 0; i < 5; ++i) {
    p = step_price(p, greedy, s, kSpot);
    CHECK(p <= price_ceiling(kSpot));
    CHECK(p.micro_cents >= 0);
  }
  CHECK(p == Money{200'000});  // parked at the ceiling, not past it
}

TEST_CASE("spot csv parsing") {
  auto pts = parse_spot_series(
      "# aws replay\ntimestamp_ms,price,mem_gb\n0,1600000,8\n3600000,1800000,8\n");
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].at.ms == 3'600'000);
  CHECK(pts[1].price_per_instance_hour == Money{1'800'000});
  CHECK(pts[0].instance_mem_gb == 8.0);
  CHECK_THROWS_AS(load_spot_series("/nonexistent/spot.csv"), std::runtime_error);
}

}  // TEST_SUITE
