#pragma once

#include <string>
#include <utility>
#include <vector>

#include "memmarket/core.hpp"

namespace mm {

// Piecewise-linear miss ratio curve over (cache_gb, miss_ratio) knots.
// Knots must be strictly increasing in gb and non-increasing in miss ratio.
class MissRatioCurve {
 public:
  MissRatioCurve() = default;
  explicit MissRatioCurve(std::vector<std::pair<double, double>> knots);

  // Clamped linear interpolation; defined on [0, max_gb] and flat beyond.
  double miss_at(double cache_gb) const;
  double max_gb() const { return knots_.empty() ? 0.0 : knots_.back().first; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  // CSV rows: cache_gb,miss_ratio
  static MissRatioCurve from_csv(const std::string& path);
  static MissRatioCurve from_csv_text(const std::string& text);

 private:
  std::vector<std::pair<double, double>> knots_;
};

}  // namespace mm
