#include "memmarket/arima.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mm {

namespace {

constexpr int kMaxIterations = 200;
constexpr double kRelTolerance = 1e-8;

// Residuals of w under (c, ar, ma); e[t] = 0 for t < p. Valid from t = p on.
void residuals(const std::vector<double>& w, double c, const std::vector<double>& ar,
               const std::vector<double>& ma, std::vector<double>& e) {
  int p = static_cast<int>(ar.size());
  int q = static_cast<int>(ma.size());
  int n = static_cast<int>(w.size());
  e.assign(n, 0.0);
  for (int t = p; t < n; ++t) {
    double pred = c;
    for (int i = 0; i < p; ++i) pred += ar[i] * w[t - 1 - i];
    for (int j = 0; j < q; ++j) pred += (t - 1 - j >= p) ? ma[j] * e[t - 1 - j] : 0.0;
    e[t] = w[t] - pred;
  }
}

double sse_of(const std::vector<double>& e, int p) {
  double s = 0.0;
  for (int t = p; t < static_cast<int>(e.size()); ++t) s += e[t] * e[t];
  return s;
}

// Solve A x = b in place, A symmetric positive (semi)definite, tiny k.
bool solve_normal(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  int k = static_cast<int>(b.size());
  for (int col = 0; col < k; ++col) {
    int pivot = col;
    for (int r = col + 1; r < k; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (int r = col + 1; r < k; ++r) {
      double f = a[r][col] / a[col][col];
      for (int c2 = col; c2 < k; ++c2) a[r][c2] -= f * a[col][c2];
      b[r] -= f * b[col];
    }
  }
  for (int col = k - 1; col >= 0; --col) {
    double s = b[col];
    for (int c2 = col + 1; c2 < k; ++c2) s -= a[col][c2] * b[c2];
    b[col] = s / a[col][col];
  }
  return true;
}

// Forecast on the differenced scale; future residuals are zero.
std::vector<double> forecast_differenced(const ArimaModel& m, const std::vector<double>& w,
                                         const std::vector<double>& e, int h) {
  int p = m.order.p, q = m.order.q;
  std::vector<double> hist = w;
  std::vector<double> resid = e;
  std::vector<double> out;
  out.reserve(h);
  for (int k = 0; k < h; ++k) {
    double pred = m.intercept;
    int n = static_cast<int>(hist.size());
    for (int i = 0; i < p; ++i) pred += (n - 1 - i >= 0) ? m.ar[i] * hist[n - 1 - i] : 0.0;
    int nr = static_cast<int>(resid.size());
    for (int j = 0; j < q; ++j) pred += (nr - 1 - j >= 0) ? m.ma[j] * resid[nr - 1 - j] : 0.0;
    out.push_back(pred);
    hist.push_back(pred);
    resid.push_back(0.0);
  }
  return out;
}

}  // namespace

std::vector<double> difference(const std::vector<double>& series, int d) {
  if (d < 0) throw std::invalid_argument("negative differencing order");
  if (static_cast<int>(series.size()) <= d) throw std::invalid_argument("series too short");
  std::vector<double> w = series;
  for (int r = 0; r < d; ++r) {
    std::vector<double> next(w.size() - 1);
    for (std::size_t i = 0; i + 1 < w.size(); ++i) next[i] = w[i + 1] - w[i];
    w = std::move(next);
  }
  return w;
}

std::optional<ArimaModel> fit_arima(const std::vector<double>& series, ArimaOrder order) {
  const int p = order.p, d = order.d, q = order.q;
  if (p < 0 || d < 0 || q < 0) return std::nullopt;
  if (static_cast<int>(series.size()) <= d) return std::nullopt;
  std::vector<double> w = difference(series, d);
  const int n = static_cast<int>(w.size());
  if (n < 10 * (p + q + 1)) return std::nullopt;

  const bool use_intercept = (d == 0);
  const int k = (use_intercept ? 1 : 0) + p + q;

  double c = 0.0;
  std::vector<double> ar(p, 0.0), ma(q, 0.0);
  if (use_intercept) {
    double mean = 0.0;
    for (double v : w) mean += v;
    c = mean / n;
  }

  std::vector<double> e;
  residuals(w, c, ar, ma, e);
  double sse = sse_of(e, p);

  if (k > 0) {
    // Derivative recursions share the MA feedback structure of the residuals.
    std::vector<std::vector<double>> de(k, std::vector<double>(n, 0.0));
    bool converged = false;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
      for (auto& row : de) std::fill(row.begin(), row.end(), 0.0);
      for (int t = p; t < n; ++t) {
        int idx = 0;
        if (use_intercept) {
          double dd = -1.0;
          for (int j = 0; j < q; ++j)
            if (t - 1 - j >= p) dd -= ma[j] * de[idx][t - 1 - j];
          de[idx][t] = dd;
          ++idx;
        }
        for (int i = 0; i < p; ++i, ++idx) {
          double dd = -w[t - 1 - i];
          for (int j = 0; j < q; ++j)
            if (t - 1 - j >= p) dd -= ma[j] * de[idx][t - 1 - j];
          de[idx][t] = dd;
        }
        for (int jj = 0; jj < q; ++jj, ++idx) {
          double dd = (t - 1 - jj >= p) ? -e[t - 1 - jj] : 0.0;
          for (int j = 0; j < q; ++j)
            if (t - 1 - j >= p) dd -= ma[j] * de[idx][t - 1 - j];
          de[idx][t] = dd;
        }
      }

      std::vector<std::vector<double>> jtj(k, std::vector<double>(k, 0.0));
      std::vector<double> jte(k, 0.0);
      for (int a = 0; a < k; ++a) {
        for (int b = a; b < k; ++b) {
          double s = 0.0;
          for (int t = p; t < n; ++t) s += de[a][t] * de[b][t];
          jtj[a][b] = jtj[b][a] = s;
        }
        double s = 0.0;
        for (int t = p; t < n; ++t) s += de[a][t] * e[t];
        jte[a] = -s;
      }
      double ridge = 1e-10;
      for (int a = 0; a < k; ++a) jtj[a][a] += ridge;
      std::vector<double> delta = jte;
      auto jtj_copy = jtj;
      if (!solve_normal(jtj_copy, delta)) return std::nullopt;

      // Damped update: halve the step until SSE does not increase.
      double scale = 1.0;
      double new_sse = std::numeric_limits<double>::infinity();
      double nc = c;
      std::vector<double> nar = ar, nma = ma, ne;
      for (int half = 0; half < 16; ++half) {
        int idx = 0;
        nc = c;
        nar = ar;
        nma = ma;
        if (use_intercept) nc = c + scale * delta[idx++];
        for (int i = 0; i < p; ++i) nar[i] = ar[i] + scale * delta[idx++];
        for (int j = 0; j < q; ++j) nma[j] = ma[j] + scale * delta[idx++];
        residuals(w, nc, nar, nma, ne);
        new_sse = sse_of(ne, p);
        if (std::isfinite(new_sse) && new_sse <= sse * (1.0 + 1e-12)) break;
        scale *= 0.5;
      }
      if (!std::isfinite(new_sse)) return std::nullopt;
      double rel = std::fabs(sse - new_sse) / std::max(sse, 1e-30);
      c = nc;
      ar = std::move(nar);
      ma = std::move(nma);
      e = std::move(ne);
      sse = new_sse;
      if (rel < kRelTolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) return std::nullopt;
  }

  for (double v : ar)
    if (!std::isfinite(v)) return std::nullopt;
  for (double v : ma)
    if (!std::isfinite(v)) return std::nullopt;
  if (!std::isfinite(c)) return std::nullopt;

  ArimaModel m;
  m.order = order;
  m.intercept = c;
  m.ar = ar;
  m.ma = ma;
  int dof = std::max(1, n - p - k);
  m.sigma2 = sse / dof;
  m.fitted = true;

  // Unstable fits show up as exploding forecasts; reject them here rather
  // than constraining the optimizer.
  double max_abs = 1e-12;
  for (double v : series) max_abs = std::max(max_abs, std::fabs(v));
  auto probe = forecast(m, series, 20);
  for (double v : probe)
    if (!std::isfinite(v) || std::fabs(v) > 10.0 * max_abs + 1e-9) return std::nullopt;

  return m;
}

std::vector<double> forecast(const ArimaModel& model,
                             const std::vector<double>& last_observations, int horizon) {
  if (!model.fitted) throw std::logic_error("forecast from unfitted model");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const int d = model.order.d;
  int need = std::max(model.order.p, model.order.q) + d;
  if (static_cast<int>(last_observations.size()) < std::max(need, d + 1))
    throw std::invalid_argument("insufficient trailing observations");

  std::vector<double> w = difference(last_observations, d);
  std::vector<double> e;
  residuals(w, model.intercept, model.ar, model.ma, e);
  std::vector<double> fw = forecast_differenced(model, w, e, horizon);

  // Integrate back to level scale one differencing order at a time.
  for (int r = d; r >= 1; --r) {
    std::vector<double> tail = difference(last_observations, r - 1);
    double level = tail.back();
    for (double& v : fw) {
      v = level + v;
      level = v;
    }
  }
  return fw;
}

std::vector<ArimaOrder> default_order_grid() {
  std::vector<ArimaOrder> grid;
  for (int p = 0; p <= 3; ++p)
    for (int d = 0; d <= 1; ++d)
      for (int q = 0; q <= 2; ++q) grid.push_back({p, d, q});
  return grid;
}

ArimaOrder grid_search(const std::vector<double>& series, const std::vector<ArimaOrder>& grid) {
  const int n = static_cast<int>(series.size());
  const ArimaOrder fallback{0, 1, 0};
  if (n < 10) return fallback;
  int holdout = std::max(1, n / 5);
  int head = n - holdout;

  bool have_best = false;
  ArimaOrder best{};
  double best_mse = std::numeric_limits<double>::infinity();
  for (const auto& order : grid) {
    std::vector<double> train(series.begin(), series.begin() + head);
    auto model = fit_arima(train, order);
    if (!model) continue;
    double err = 0.0;
    int count = 0;
    bool bad = false;
    for (int i = head; i < n; ++i) {
      std::vector<double> obs(series.begin(), series.begin() + i);
      double f;
      try {
        f = forecast(*model, obs, 1)[0];
      } catch (const std::exception&) {
        bad = true;
        break;
      }
      if (!std::isfinite(f)) {
        bad = true;
        break;
      }
      err += (f - series[i]) * (f - series[i]);
      ++count;
    }
    if (bad || count == 0) continue;
    double mse = err / count;
    auto better = [&] {
      if (!have_best) return true;
      if (mse < best_mse * (1.0 - 1e-12)) return true;
      if (mse > best_mse * (1.0 + 1e-12)) return false;
      if (order.p + order.q != best.p + best.q) return order.p + order.q < best.p + best.q;
      return order.p < best.p;
    };
    if (better()) {
      have_best = true;
      best = order;
      best_mse = mse;
    }
  }
  return have_best ? best : fallback;
}

std::string model_to_json(const ArimaModel& m) {
  nlohmann::json j{{"order", {{"p", m.order.p}, {"d", m.order.d}, {"q", m.order.q}}},
                   {"intercept", m.intercept},
                   {"ar", m.ar},
                   {"ma", m.ma},
                   {"sigma2", m.sigma2},
                   {"fitted_at", m.fitted_at.ms}};
  return j.dump();
}

ArimaModel model_from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  ArimaModel m;
  m.order = {j["order"]["p"], j["order"]["d"], j["order"]["q"]};
  m.intercept = j["intercept"];
  m.ar = j["ar"].get<std::vector<double>>();
  m.ma = j["ma"].get<std::vector<double>>();
  m.sigma2 = j["sigma2"];
  m.fitted_at = Instant{j["fitted_at"]};
  m.fitted = true;
  return m;
}

double over_prediction_rate(const std::vector<double>& predicted,
                            const std::vector<double>& actual, double margin) {
  std::size_t n = std::min(predicted.size(), actual.size());
  if (n == 0) return 0.0;
  std::size_t over = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double base = std::max(std::fabs(actual[i]), 1e-12);
    if ((predicted[i] - actual[i]) / base > margin) ++over;
  }
  return static_cast<double>(over) / static_cast<double>(n);
}

double AvailabilityPredictor::predict_min_free(const TimeSeries& history, Duration lease,
                                               Instant now) {
  int h = std::max<Millis>(1, (lease.ms + history.step.ms - 1) / history.step.ms);
  const auto& v = history.values;
  auto naive_min = [&] {
    return v.empty() ? 0.0 : std::max(0.0, v.back());
  };
  Millis span = static_cast<Millis>(v.size()) * history.step.ms;
  if (v.size() < 4 || span < kMillisPerDay) return naive_min();

  if (!last_tune_ || (now - *last_tune_).ms >= kMillisPerDay) {
    order_ = grid_search(v);
    last_tune_ = now;
    ++tune_count_;
  }
  auto model = fit_arima(v, order_);
  if (!model) return naive_min();
  std::vector<double> f;
  try {
    f = forecast(*model, v, h);
  } catch (const std::exception&) {
    return naive_min();
  }
  double mn = std::numeric_limits<double>::infinity();
  for (double x : f) mn = std::min(mn, x);
  if (!std::isfinite(mn)) return naive_min();
  return std::max(0.0, mn);
}

}  // namespace mm
