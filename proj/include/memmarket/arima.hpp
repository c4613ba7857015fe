#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memmarket/core.hpp"

namespace mm {

struct TimeSeries {
  Instant start{};
  Duration step{5 * kMillisPerMinute};
  std::vector<double> values;  // GB free

  Instant end() const { return {start.ms + static_cast<Millis>(values.size()) * step.ms}; }
};

struct ArimaOrder {
  int p = 0;
  int d = 0;
  int q = 0;
  friend auto operator<=>(const ArimaOrder&, const ArimaOrder&) = default;
};

struct ArimaModel {
  ArimaOrder order{};
  double intercept = 0.0;  // fitted only when d == 0; drift is not modeled
  std::vector<double> ar;
  std::vector<double> ma;
  double sigma2 = 0.0;
  bool fitted = false;
  Instant fitted_at{};
};

// d-fold first differences; length shrinks by d.
std::vector<double> difference(const std::vector<double>& series, int d);

// Conditional-sum-of-squares estimate via damped Gauss-Newton. Returns
// nullopt on non-convergence, non-finite coefficients, or unstable fits
// whose forecasts explode past 10x the series magnitude.
std::optional<ArimaModel> fit_arima(const std::vector<double>& series, ArimaOrder order);

// Recursive point forecast, un-differenced back to level scale.
std::vector<double> forecast(const ArimaModel& model,
                             const std::vector<double>& last_observations, int horizon);

std::vector<ArimaOrder> default_order_grid();  // p<=3, d<=1, q<=2

// Fits each order on the leading 80%, scores rolling one-step forecasts on
// the trailing 20%, returns the order with minimal holdout MSE.
// Ties break toward smallest p+q, then smallest p. All fits failing
// degrades to (0,1,0), the naive last-value model.
ArimaOrder grid_search(const std::vector<double>& series,
                       const std::vector<ArimaOrder>& grid = default_order_grid());

std::string model_to_json(const ArimaModel& m);
ArimaModel model_from_json(const std::string& json_text);

// Fraction of points where predicted exceeds actual by more than `margin`
// (relative). Reported, never asserted against any fixed value.
double over_prediction_rate(const std::vector<double>& predicted,
                            const std::vector<double>& actual, double margin = 0.04);

// Per-producer availability forecaster with daily order retuning.
class AvailabilityPredictor {
 public:
  // Minimum forecast free memory (GB, floored at 0) over the lease horizon.
  // Degrades to the naive last-value model on short history or failed fits.
  double predict_min_free(const TimeSeries& history, Duration lease, Instant now);

  const ArimaOrder& order() const { return order_; }
  int tune_count() const { return tune_count_; }

 private:
  ArimaOrder order_{0, 1, 0};
  std::optional<Instant> last_tune_;
  int tune_count_ = 0;
};

}  // namespace mm
