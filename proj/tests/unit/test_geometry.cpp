#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <tuple>

#include "helpers.hpp"
#include "vsepcf/error.hpp"
#include "vsepcf/geometry.hpp"

using namespace vsepcf;

namespace {

struct Key {
  std::uint32_t i, j;
  auto operator<=>(const Key&) const = default;
};

std::set<Key> brute_force(const PointPattern& x, double lo, double hi) {
  std::set<Key> out;
  for (std::uint32_t i = 0; i < x.size(); ++i)
    for (std::uint32_t j = 0; j < x.size(); ++j) {
      if (i == j) continue;
      const double dx = x[j].x - x[i].x, dy = x[j].y - x[i].y;
      const double t = std::sqrt(dx * dx + dy * dy);
      if (t >= lo && t <= hi) out.insert({i, j});
    }
  return out;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("set covariance of a rectangle") {
  const Window w(0, 0, 2, 1);
  CHECK(w.set_covariance(0, 0) == 2.0);
  CHECK(w.set_covariance(0.5, -0.25) == doctest::Approx(1.5 * 0.75));
  CHECK(w.set_covariance(2.5, 0) == 0.0);
}

TEST_CASE("set covariance against Monte Carlo") {
  const Window w = Window::unit_square();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  const int n = 400000;
  int hit = 0;
  for (int k = 0; k < n; ++k) {
    const double x = u(rng) + 0.3, y = u(rng) + 0.4;
    hit += w.contains({x, y});
  }
  const double p = static_cast<double>(hit) / n;
  CHECK(std::abs(p - w.set_covariance(0.3, 0.4)) < 4 * std::sqrt(0.42 * 0.58 / n));
  CHECK(w.set_covariance(0.3, 0.4) == doctest::Approx(0.42));
}

TEST_CASE("isotropic set covariance: closed form against angular quadrature") {
  const Window w(0, 0, 1.5, 1);
  for (double t : {0.0, 0.05, 0.1, 0.5, 0.99}) {
    const double closed = 1.5 - (2 / std::numbers::pi) * 2.5 * t + t * t / std::numbers::pi;
    CHECK(w.iso_set_covariance(t) == doctest::Approx(closed).epsilon(1e-14));
    CHECK(w.iso_set_covariance_quadrature(t) == doctest::Approx(closed).epsilon(1e-10));
  }
  CHECK(w.iso_set_covariance(1.2) == doctest::Approx(w.iso_set_covariance_quadrature(1.2)));
}

TEST_CASE("pattern validation") {
  const Window w = Window::unit_square();
  CHECK_THROWS_AS(PointPattern(w, {{1.5, 0.5}}), InvalidArgument);
  CHECK_THROWS_AS(PointPattern(w, {{0.5, 0.5}}, std::vector<double>{-1}), InvalidArgument);
  CHECK_THROWS_AS(PointPattern(w, {{0.5, 0.5}}, std::vector<double>{1, 2}), InvalidArgument);
  CHECK_THROWS_AS(Window(0, 0, 0, 1), InvalidArgument);
  const PointPattern x(w, {{0.1, 0.1}, {0.9, 0.9}});
  CHECK(x.plugin_intensity() == 2.0);
}

TEST_CASE("two-point pattern gives both orientations") {
  const Window w = Window::unit_square();
  const PointPattern x(w, {{0.2, 0.2}, {0.23, 0.24}});
  const auto pairs = close_pairs(x, 0.0, 0.1, IntensityModel::constant(2.0));
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].t == doctest::Approx(0.05));
  CHECK(pairs[0].dx == doctest::Approx(0.03));
  CHECK(pairs[1].dx == doctest::Approx(-0.03));
  CHECK(pairs[0].e == doctest::Approx(1.0 / (4 * 0.97 * 0.96)));
  CHECK(pairs.partner(0) == 1);
  CHECK(pairs.unordered() == std::vector<std::size_t>{0});
}

TEST_CASE("grid enumeration equals brute force") {
  const Window w(0, 0, 1.3, 0.7);
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const std::size_t n = 50 + (seed * 83) % 951;
    const auto x = testing::uniform_pattern(w, n, seed);
    const double lo = seed % 3 == 0 ? 0.02 : 0.0;
    const double hi = 0.03 + 0.05 * static_cast<double>(seed % 5);
    const auto pairs = close_pairs(x, lo, hi, IntensityModel::constant(1.0));
    std::set<Key> got;
    for (const auto& p : pairs.pairs()) got.insert({p.i, p.j});
    CHECK(got.size() == pairs.size());
    CHECK(got == brute_force(x, lo, hi));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& p = pairs[k];
      const auto& q = pairs[pairs.partner(k)];
      CHECK((q.i == p.j && q.j == p.i));
      CHECK(p.e == doctest::Approx(1.0 / w.set_covariance(p.dx, p.dy)).epsilon(1e-14));
    }
  }
}

TEST_CASE("per-point intensities enter the edge weight") {
  const Window w = Window::unit_square();
  const PointPattern x(w, {{0.5, 0.5}, {0.55, 0.5}}, std::vector<double>{2, 5});
  const auto pairs = close_pairs(x, 0.0, 0.1, IntensityModel::per_point());
  CHECK(pairs[0].e == doctest::Approx(1.0 / (10 * 0.95)));
}

TEST_CASE("Campbell: Σ e f(t) is unbiased for ∫ f(t) 2π t dt under Poisson") {
  const Window w = Window::unit_square();
  const double rho = 150, r = 0.1;
  std::mt19937_64 rng(5);
  std::vector<double> sums;
  for (int rep = 0; rep < 300; ++rep) {
    std::poisson_distribution<int> pn(rho);
    const auto x = testing::uniform_pattern(w, static_cast<std::size_t>(pn(rng)), 1000 + rep);
    const auto pairs = close_pairs(x, 0.0, r, IntensityModel::constant(rho));
    double s = 0;
    for (const auto& p : pairs.pairs()) s += p.e * (r - p.t);
    sums.push_back(s);
  }
  const auto m = testing::moments(sums);
  const double expected = 2 * std::numbers::pi * (r * r * r / 2 - r * r * r / 3);
  CHECK(std::abs(m.mean - expected) < 3 * m.se);
}

TEST_CASE("close_pairs argument checks") {
  const auto x = testing::uniform_pattern(Window::unit_square(), 20, 3);
  CHECK_THROWS_AS(close_pairs(x, 0.0, 1.5, IntensityModel::constant(1)), InvalidArgument);
  CHECK_THROWS_AS(close_pairs(x, 0.2, 0.1, IntensityModel::constant(1)), InvalidArgument);
  CHECK_THROWS_AS(close_pairs(x, 0.0, 0.1, IntensityModel::per_point()), InvalidArgument);
}

TEST_CASE("intensity raster lookup") {
  const IntensityRaster r(Window(0, 0, 2, 1), 2, 1, {1.0, 3.0});
  CHECK(r.at({0.5, 0.5}) == 1.0);
  CHECK(r.at({1.5, 0.5}) == 3.0);
  CHECK(r.at({2.5, 0.5}) == 0.0);
  CHECK_THROWS_AS(IntensityRaster(Window(0, 0, 1, 1), 2, 2, {1.0}), InvalidArgument);
}

}
