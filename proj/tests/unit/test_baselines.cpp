#include "doctest.h"

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "vsepcf/baselines.hpp"
#include "vsepcf/error.hpp"
#include "vsepcf/quadrature.hpp"
#include "vsepcf/simulate.hpp"

using namespace vsepcf;

namespace {
const BasisSpec basis(0.125, 0.0, 25);
}

TEST_SUITE("baselines") {

TEST_CASE("Epanechnikov kernel has unit mass") {
  for (double h : {0.001, 0.01, 0.3}) {
    double mass = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double u = -h + (i + 0.5) * 2 * h / n;
      mass += epanechnikov(u, h) * 2 * h / n;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(epanechnikov(1.01 * h, h) == 0.0);
    CHECK(epanechnikov(-0.3 * h, h) == epanechnikov(0.3 * h, h));
  }
}

TEST_CASE("OSE is unbiased for Poisson") {
  const auto m = ModelSpec::poisson(200);
  const std::vector<double> rs{0.02, 0.06, 0.1};
  std::vector<std::vector<double>> g(rs.size());
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto x = simulate(m, Window::unit_square(), {21, s});
    const auto fit = ose_fit(x, IntensityModel::constant(200), basis, 4);
    for (std::size_t i = 0; i < rs.size(); ++i) g[i].push_back(fit.g(rs[i]));
  }
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto mom = testing::moments(g[i]);
    CHECK(std::abs(mom.mean - 1.0) < 3 * mom.se);
  }
}

TEST_CASE("OSE context matches the direct fit and scores finitely") {
  const auto x = simulate(ModelSpec::reference(ModelSpec::Kind::thomas), Window::unit_square(), {2, 2});
  const auto rho = IntensityModel::constant(x.plugin_intensity());
  const OseContext ctx(x, rho, basis);
  const auto direct = ose_fit(x, rho, basis, 5);
  const auto viaCtx = ctx.fit(5);
  for (int k = 0; k < 5; ++k) CHECK(direct.theta(k) == doctest::Approx(viaCtx.theta(k)));
  const auto sel = ose_fit_auto(ctx, {}, 12);
  CHECK(sel.curve.selected >= 2);
  CHECK(sel.fit.K() == sel.curve.selected);
  CHECK(std::isfinite(sel.curve.cv[sel.curve.selected - 1]));
  CHECK(sel.fit.g(0.0) > 1.5);
  CHECK_THROWS_AS(direct.g(0.2), InvalidArgument);
}

TEST_CASE("KDE is non-negative and pairs are symmetric") {
  const auto x = simulate(ModelSpec::reference(ModelSpec::Kind::thomas), Window::unit_square(), {4, 1});
  const auto rho = IntensityModel::constant(x.plugin_intensity());
  const auto fit = kde_fit(x, rho, 0.0, 0.125, 0.01);
  CHECK(std::is_sorted(fit.t.begin(), fit.t.end()));
  for (double r = 0; r <= 0.125; r += 0.0025) CHECK(fit.g(r) >= 0);
  // Reversing the point order leaves the estimate unchanged.
  std::vector<Point> rev(x.points().rbegin(), x.points().rend());
  const PointPattern y(x.window(), rev);
  const auto fit2 = kde_fit(y, rho, 0.0, 0.125, 0.01);
  for (double r : {0.0, 0.03, 0.1}) CHECK(fit2.g(r) == doctest::Approx(fit.g(r)).epsilon(1e-12));
  const auto rad = kde_fit(x, rho, 0.0, 0.125, 0.01, KdeDivisor::radius);
  CHECK_THROWS_AS(rad.g(0.0), InvalidArgument);
  CHECK(rad.g(0.05) >= 0);
  CHECK(kde_divisor_from_string(to_string(KdeDivisor::radius)) == KdeDivisor::radius);
}

TEST_CASE("KDE averages to one under Poisson away from the boundary") {
  std::vector<double> v;
  for (std::uint64_t s = 0; s < 150; ++s) {
    const auto x = simulate(ModelSpec::poisson(200), Window::unit_square(), {31, s});
    const auto fit = kde_fit(x, IntensityModel::constant(200), 0.0, 0.125, 0.01);
    double mean = 0;
    for (int i = 0; i < 8; ++i) mean += fit.g(0.03 + i * 0.01) / 8;
    v.push_back(mean);
  }
  const auto mom = testing::moments(v);
  CHECK(std::abs(mom.mean - 1.0) < 3 * mom.se);
}

TEST_CASE("KDE bandwidth selection stays on the grid") {
  const auto x = simulate(ModelSpec::reference(ModelSpec::Kind::thomas), Window::unit_square(), {6, 3});
  const auto rho = IntensityModel::constant(x.plugin_intensity());
  KdeOptions opt;
  opt.radial_nodes = 256;
  const auto sel = kde_fit_auto(x, rho, 0.0, 0.125, opt);
  REQUIRE(sel.bandwidths.size() == opt.grid_size);
  CHECK(std::find(sel.bandwidths.begin(), sel.bandwidths.end(), sel.fit.bandwidth) !=
        sel.bandwidths.end());
  const auto best = std::max_element(sel.cv.begin(), sel.cv.end()) - sel.cv.begin();
  CHECK(sel.bandwidths[best] == sel.fit.bandwidth);
  const auto pairs = close_pairs(x, 0.0, 0.125, rho);
  const double h0 = kde_pilot_bandwidth(pairs, 0.0, 0.125);
  CHECK(sel.bandwidths.front() == doctest::Approx(0.1 * h0));
  CHECK(sel.bandwidths.back() == doctest::Approx(2.0 * h0));
}

}
