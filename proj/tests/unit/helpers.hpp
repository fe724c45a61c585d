#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "vsepcf/geometry.hpp"

namespace testing {

inline vsepcf::PointPattern uniform_pattern(const vsepcf::Window& w, std::size_t n,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(w.x0(), w.x1()), uy(w.y0(), w.y1());
  std::vector<vsepcf::Point> pts(n);
  for (auto& p : pts) p = {ux(rng), uy(rng)};
  return {w, std::move(pts)};
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

struct Moments {
  double mean = 0;
  double se = 0;
};

inline Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double m = 0;
  for (double v : x) m += v;
  m /= n;
  double s2 = 0;
  for (double v : x) s2 += (v - m) * (v - m);
  s2 /= n - 1;
  return {m, std::sqrt(s2 / n)};
}

}  // namespace testing
