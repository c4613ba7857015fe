#include <doctest.h>

#include <random>

#include "memmarket/harvester.hpp"

using namespace mm;

namespace {

HarvesterConfig small_config() {
  HarvesterConfig cfg;
  cfg.chunk_size = 64 * kMiB;
  cfg.cooling_period = Duration{10 * kMillisPerSecond};
  cfg.recovery_period = Duration{5 * kMillisPerSecond};
  cfg.epoch = Duration{kMillisPerSecond};
  return cfg;
}

void feed_baseline(Harvester& h, Millis from_ms, int n, double metric = 100.0) {
  for (int i = 0; i < n; ++i)
    h.record_sample({Instant{from_ms + i * kMillisPerSecond}, metric, false});
}

}  // namespace

TEST_SUITE("harvester") {

TEST_CASE("config validation") {
  HarvesterConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.p99_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = HarvesterConfig{};
  cfg.chunk_size = 0;
  CHECK_THROWS_AS(Harvester(cfg, kSlabSize), std::invalid_argument);
}

TEST_CASE("drop detection is relative with an absolute epsilon at zero") {
  auto lower = MetricOrientation::LowerIsBetter;
  CHECK(Harvester::detect_drop(100.0, 101.1, 0.01, lower));
  CHECK(!Harvester::detect_drop(100.0, 101.0, 0.01, lower));  // boundary is strict
  CHECK(!Harvester::detect_drop(100.0, 100.9, 0.01, lower));
  CHECK(Harvester::detect_drop(0.0, 1e-6, 0.01, lower));
  CHECK(!Harvester::detect_drop(0.0, 0.0, 0.01, lower));
  auto higher = MetricOrientation::HigherIsBetter;
  CHECK(Harvester::detect_drop(100.0, 98.9, 0.01, higher));
  CHECK(!Harvester::detect_drop(100.0, 99.0, 0.01, higher));
  CHECK_THROWS_AS(Harvester::detect_drop(std::nan(""), 1.0, 0.01, lower),
                  std::invalid_argument);
}

TEST_CASE("empty windows hold; steady metrics harvest once per cooling period") {
  Harvester h(small_config(), 1024 * kMiB);
  CHECK(h.step(Instant{0}, false).kind == ActionKind::Hold);  // nothing recorded yet

  feed_baseline(h, 0, 10);
  auto a = h.step(Instant{10'000}, false);
  CHECK(a.kind == ActionKind::Harvest);
  CHECK(a.harvested == 64 * kMiB);
  CHECK(h.step(Instant{11'000}, false).kind == ActionKind::Hold);  // cooling
  CHECK(h.step(Instant{19'999}, false).kind == ActionKind::Hold);
  CHECK(h.step(Instant{20'000}, false).kind == ActionKind::Harvest);
}

TEST_CASE("a growing silo pauses harvesting") {
  Harvester h(small_config(), 1024 * kMiB);
  feed_baseline(h, 0, 10);
  CHECK(h.step(Instant{10'000}, true).kind == ActionKind::Hold);
  CHECK(h.step(Instant{10'000}, false).kind == ActionKind::Harvest);
}

TEST_CASE("limit never underflows below one chunk") {
  auto cfg = small_config();
  Harvester h(cfg, cfg.chunk_size + cfg.chunk_size / 2);  // room for one harvest only
  feed_baseline(h, 0, 10);
  CHECK(h.step(Instant{10'000}, false).kind == ActionKind::Harvest);
  CHECK(h.step(Instant{30'000}, false).kind == ActionKind::Hold);
  CHECK(*h.state().limit == cfg.chunk_size / 2);
}

TEST_CASE("performance drop triggers recovery: one chunk back, limit disabled") {
  auto cfg = small_config();
  Harvester h(cfg, 1024 * kMiB);
  feed_baseline(h, 0, 10);
  CHECK(h.step(Instant{10'000}, false).kind == ActionKind::Harvest);
  CHECK(h.step(Instant{20'000}, false).kind == ActionKind::Harvest);
  CHECK(h.step(Instant{30'000}, false).kind == ActionKind::Harvest);

  // page-in epochs keep the bad samples out of the baseline
  h.record_sample({Instant{31'000}, 300.0, true});
  auto a = h.step(Instant{31'000}, false);
  CHECK(a.kind == ActionKind::Recover);
  CHECK(a.released == cfg.chunk_size);  // exactly one chunk returns
  CHECK(h.state().mode == HarvestMode::Recovery);
  CHECK(!h.state().limit.has_value());  // limit enforcement off

  // every step inside the recovery period holds, never harvests
  CHECK(h.step(Instant{32'000}, false).kind == ActionKind::Hold);
  CHECK(h.step(Instant{35'999}, false).kind == ActionKind::Hold);

  CHECK(h.stats().total_harvested == 2 * cfg.chunk_size);  // 3 out, 1 back
}

TEST_CASE("net harvest and idle fraction") {
  auto cfg = small_config();
  Harvester h(cfg, 1024 * kMiB, cfg.chunk_size);  // one chunk was simply unallocated
  feed_baseline(h, 0, 10);
  h.step(Instant{10'000}, false);
  h.step(Instant{20'000}, false);
  h.step(Instant{30'000}, false);
  h.record_sample({Instant{31'000}, 300.0, true});
  h.step(Instant{31'000}, false);
  auto st = h.stats();
  CHECK(st.total_harvested == 2 * cfg.chunk_size);
  CHECK(st.idle_fraction == doctest::Approx(0.5));  // half came from idle pages
}

TEST_CASE("prefetch fires on the third consecutive severe epoch") {
  auto cfg = small_config();
  Harvester h(cfg, 1024 * kMiB);
  feed_baseline(h, 0, 10);
  for (int i = 0; i < 3; ++i) {
    Instant t{11'000 + i * 1000};
    h.record_sample({t, 500.0, true});  // strictly worse than every baseline point
    auto a = h.step(t, false);
    if (i < 2)
      CHECK(a.prefetch_bytes == 0);
    else
      CHECK(a.prefetch_bytes == cfg.chunk_size);
  }
  // one good epoch resets the streak
  h.record_sample({Instant{15'000}, 50.0, true});
  CHECK(h.step(Instant{15'000}, false).prefetch_bytes == 0);
  CHECK(h.state().consecutive_severe == 0);
}

TEST_CASE("csv action log line") {
  Harvester h(small_config(), 1024 * kMiB);
  feed_baseline(h, 0, 5);
  h.step(Instant{5'000}, false);
  CHECK(h.csv_line() == "5000,harvesting," + std::to_string(1024 * kMiB - 64 * kMiB) +
                            ",harvest");
}

TEST_CASE("randomized sequences never violate cooling or recovery rules") {
  std::mt19937_64 rng(11);
  std::lognormal_distribution<double> metric(4.6, 0.4);
  std::bernoulli_distribution page_in(0.3);
  std::bernoulli_distribution grew(0.2);
  auto cfg = small_config();
  for (int trial = 0; trial < 1000; ++trial) {
    Harvester h(cfg, 512 * kMiB);
    Millis last_harvest = -1'000'000;
    for (int e = 0; e < 40; ++e) {
      Instant t{e * kMillisPerSecond};
      h.record_sample({t, metric(rng), page_in(rng)});
      bool recovering =
          h.state().mode == HarvestMode::Recovery && t < h.state().recovery_until;
      auto a = h.step(t, grew(rng));
      if (recovering) CHECK(a.kind != ActionKind::Harvest);
      if (a.kind == ActionKind::Harvest) {
        CHECK(t.ms - last_harvest >= cfg.cooling_period.ms);
        last_harvest = t.ms;
      }
      if (h.state().mode == HarvestMode::Recovery) CHECK(!h.state().limit.has_value());
    }
  }
}

}  // TEST_SUITE
