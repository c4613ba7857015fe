#include "memmarket/mrc.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mm {

MissRatioCurve::MissRatioCurve(std::vector<std::pair<double, double>> knots)
    : knots_(std::move(knots)) {
  if (knots_.empty()) throw std::invalid_argument("mrc needs at least one knot");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    auto [gb, miss] = knots_[i];
    if (gb < 0 || miss < 0.0 || miss > 1.0) throw std::invalid_argument("mrc knot out of range");
    if (i > 0) {
      if (gb <= knots_[i - 1].first) throw std::invalid_argument("mrc gb must strictly increase");
      if (miss > knots_[i - 1].second + 1e-12)
        throw std::invalid_argument("miss ratio must be non-increasing");
    }
  }
}

double MissRatioCurve::miss_at(double cache_gb) const {
  if (knots_.empty()) return 1.0;
  if (cache_gb <= knots_.front().first) return knots_.front().second;
  if (cache_gb >= knots_.back().first) return knots_.back().second;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (cache_gb <= knots_[i].first) {
      auto [g0, m0] = knots_[i - 1];
      auto [g1, m1] = knots_[i];
      double t = (cache_gb - g0) / (g1 - g0);
      return m0 + t * (m1 - m0);
    }
  }
  return knots_.back().second;
}

MissRatioCurve MissRatioCurve::from_csv_text(const std::string& text) {
  std::vector<std::pair<double, double>> knots;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find("cache_gb") != std::string::npos) continue;  // header
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) continue;
    knots.emplace_back(std::stod(a), std::stod(b));
  }
  return MissRatioCurve(std::move(knots));
}

MissRatioCurve MissRatioCurve::from_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open mrc file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_csv_text(ss.str());
}

}  // namespace mm
