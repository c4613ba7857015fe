#include <doctest.h>

#include <cmath>
#include <random>

#include "memmarket/arima.hpp"

using namespace mm;

namespace {

std::vector<double> ar1_series(double phi, std::size_t n, std::uint64_t seed,
                               double intercept = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x(n);
  double prev = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    prev = intercept + phi * prev + noise(rng);
    x[t] = prev;
  }
  return x;
}

}  // namespace

TEST_SUITE("arima") {

TEST_CASE("differencing") {
  std::vector<double> x{1, 4, 9, 16};
  CHECK(difference(x, 0) == x);
  CHECK(difference(x, 1) == std::vector<double>{3, 5, 7});
  CHECK(difference(x, 2) == std::vector<double>{2, 2});
}

TEST_CASE("the (0,1,0) forecast equals the last value exactly") {
  std::vector<double> x{3.5, 7.25, 2.0, 11.125};
  ArimaModel m;
  m.order = {0, 1, 0};
  m.fitted = true;
  auto f = forecast(m, x, 4);
  REQUIRE(f.size() == 4);
  for (double v : f) CHECK(v == 11.125);  // bit-exact random walk
}

TEST_CASE("AR(1) coefficient recovery") {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto x = ar1_series(0.6, 2000, seed);
    auto m = fit_arima(x, {1, 0, 0});
    REQUIRE(m.has_value());
    if (m->ar[0] >= 0.5 && m->ar[0] <= 0.7) ++hits;
  }
  CHECK(hits >= 4);
}

TEST_CASE("fit rejects degenerate inputs") {
  CHECK(!fit_arima({1.0, 2.0, 3.0}, {1, 0, 1}).has_value());  // far too short
  auto m = fit_arima({}, {0, 0, 0});
  CHECK(!m.has_value());
}

TEST_CASE("grid search prefers autoregressive structure on AR data") {
  int ar_picked = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto order = grid_search(ar1_series(0.8, 400, seed));
    if (order.p >= 1) ++ar_picked;
  }
  CHECK(ar_picked >= 4);
}

TEST_CASE("grid search degrades to the naive model") {
  CHECK(grid_search({1.0, 2.0}) == ArimaOrder{0, 1, 0});
}

TEST_CASE("model json round trip") {
  auto x = ar1_series(0.5, 500, 9);
  auto m = fit_arima(x, {1, 0, 1});
  REQUIRE(m.has_value());
  auto back = model_from_json(model_to_json(*m));
  CHECK(back.order == m->order);
  CHECK(back.ar == m->ar);
  CHECK(back.ma == m->ma);
  CHECK(back.intercept == m->intercept);
}

TEST_CASE("forecast validates inputs") {
  ArimaModel m;
  m.order = {0, 1, 0};
  m.fitted = true;
  CHECK_THROWS_AS(forecast(m, {1.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(forecast(m, {}, 1), std::invalid_argument);
}

TEST_CASE("availability predictor falls back to last value on short history") {
  AvailabilityPredictor p;
  TimeSeries h;
  h.step = Duration{5 * kMillisPerMinute};
  h.values = {4.0, 3.0, 2.5};
  CHECK(p.predict_min_free(h, Duration{kMillisPerHour}, Instant{0}) == 2.5);
  CHECK(p.tune_count() == 0);  // no model was ever tuned
  h.values.clear();
  CHECK(p.predict_min_free(h, Duration{kMillisPerHour}, Instant{0}) == 0.0);
}

TEST_CASE("availability predictor retunes daily") {
  AvailabilityPredictor p;
  TimeSeries h;
  h.step = Duration{5 * kMillisPerMinute};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < 600; ++i)  // > 2 days of history
    h.values.push_back(10.0 + noise(rng));
  Instant now{2 * kMillisPerDay};
  double f = p.predict_min_free(h, Duration{kMillisPerHour}, now);
  CHECK(p.tune_count() == 1);
  CHECK(f >= 0.0);
  CHECK(f == doctest::Approx(10.0).epsilon(0.2));
  p.predict_min_free(h, Duration{kMillisPerHour}, now + Duration{kMillisPerHour});
  CHECK(p.tune_count() == 1);  // same day: no retune
  p.predict_min_free(h, Duration{kMillisPerHour}, now + Duration{kMillisPerDay});
  CHECK(p.tune_count() == 2);
}

TEST_CASE("over-prediction rate") {
  // first point exceeds actual by 5% (> 4% margin), second does not
  CHECK(over_prediction_rate({105.0, 100.0}, {100.0, 100.0}) == doctest::Approx(0.5));
  CHECK(over_prediction_rate({}, {}) == 0.0);
}

}  // TEST_SUITE
