#include "memmarket/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mm {

Money initial_price(const SpotPricePoint& spot) {
  if (spot.instance_mem_gb <= 0.0) throw std::invalid_argument("instance memory must be positive");
  double unit = static_cast<double>(spot.price_per_instance_hour.micro_cents) /
                spot.instance_mem_gb;
  return Money{static_cast<MicroCents>(std::floor(0.25 * unit))};
}

Money price_ceiling(const SpotPricePoint& spot) {
  if (spot.instance_mem_gb <= 0.0) throw std::invalid_argument("instance memory must be positive");
  double unit = static_cast<double>(spot.price_per_instance_hour.micro_cents) /
                spot.instance_mem_gb;
  return Money{static_cast<MicroCents>(std::floor(unit))};
}

double revenue_of(Money price, double matched_gb_hours) {
  return static_cast<double>(price.micro_cents) * matched_gb_hours;
}

Money step_price(Money current, const PriceEvaluator& evaluate, const PricingStrategy& strategy,
                 const SpotPricePoint& spot) {
  Money ceiling = price_ceiling(spot);
  auto clamp = [&](Money p) {
    if (p.micro_cents < 0) p.micro_cents = 0;
    if (p > ceiling) p = ceiling;
    return p;
  };

  if (strategy.objective == PricingObjective::FixedFraction) {
    double unit = static_cast<double>(spot.price_per_instance_hour.micro_cents) /
                  spot.instance_mem_gb;
    return clamp(Money{static_cast<MicroCents>(std::floor(strategy.fraction * unit))});
  }

  current = clamp(current);
  Money candidates[3] = {clamp(current - strategy.step), current,
                         clamp(current + strategy.step)};
  // evaluate ascending so the tie rule (lower price wins) falls out of a
  // strict improvement test
  std::sort(std::begin(candidates), std::end(candidates));
  Money best = candidates[0];
  double best_score = -1.0;
  Money prev{-1};
  for (const Money& c : candidates) {
    if (c == prev) continue;  // clamping can collapse candidates
    prev = c;
    auto outcome = evaluate(c);
    double score = strategy.objective == PricingObjective::MaxRevenue
                       ? revenue_of(c, outcome.matched_gb_hours)
                       : outcome.matched_gb_hours;
    if (score > best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

std::vector<SpotPricePoint> parse_spot_series(const std::string& text) {
  std::vector<SpotPricePoint> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find("timestamp") != std::string::npos) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c, ','))
      continue;
    SpotPricePoint p;
    p.at = Instant{std::stoll(a)};
    p.price_per_instance_hour = Money{std::stoll(b)};
    p.instance_mem_gb = std::stod(c);
    out.push_back(p);
  }
  return out;
}

std::vector<SpotPricePoint> load_spot_series(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open spot series: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_spot_series(ss.str());
}

}  // namespace mm
