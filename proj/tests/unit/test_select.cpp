#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "vsepcf/error.hpp"
#include "vsepcf/select.hpp"
#include "vsepcf/simulate.hpp"

using namespace vsepcf;

namespace {

const BasisSpec basis(0.125, 0.0, 25);
const PsiSpec psi(0.125);
constexpr double ninf = -std::numeric_limits<double>::infinity();

// CV(K) with every leave-pair-out fit solved from scratch.
double naive_cv(const PointPattern& x, const IntensityModel& rho, int K) {
  const auto pairs = close_pairs(x, 0.0, 0.125, rho);
  const auto sys = VariationalSystem::assemble(pairs, basis, psi, K);
  const auto full = solve_system(sys.A(), sys.b());
  double sum = 0;
  for (std::size_t k : pairs.unordered()) {
    const auto [A, b] = downdated_system(sys, k, pairs.partner(k));
    const Eigen::VectorXd beta = -A.inverse() * b;
    const Pair& p = pairs[k];
    sum += std::log(rho.at(x, p.i)) + std::log(rho.at(x, p.j)) +
           eval_log_g(basis, {beta.data(), static_cast<std::size_t>(K)}, p.t);
  }
  const PairIntegrator integ(x.window(), rho, 0.0, 0.125);
  const double integral = integ.integrate([&](double t) {
    return std::exp(eval_log_g(basis, {full.beta.data(), static_cast<std::size_t>(K)}, t));
  });
  return sum - static_cast<double>(pairs.unordered().size()) * std::log(integral);
}

}  // namespace

TEST_SUITE("select") {

TEST_CASE("Sherman-Morrison against a direct inverse") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 2 + trial % 6;
    Eigen::MatrixXd M(K, K);
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) M(i, j) = n01(rng);
    const Eigen::MatrixXd A = M * M.transpose() + Eigen::MatrixXd::Identity(K, K);
    Eigen::VectorXd u(K);
    for (int i = 0; i < K; ++i) u(i) = 0.3 * n01(rng);
    const double c = 0.5;
    const Eigen::MatrixXd direct = (A - c * u * u.transpose()).inverse();
    const Eigen::MatrixXd sm = sherman_morrison_downdate(A.inverse(), u, c);
    CHECK((sm - direct).norm() <= 1e-10 * direct.norm());
  }
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(2, 0);
  CHECK_THROWS_AS(sherman_morrison_downdate(I, e1, 1.0), SingularSystem);
}

TEST_CASE("leave-pair-out downdate equals naive recompute") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = simulate(ModelSpec::reference(ModelSpec::Kind::thomas), Window::unit_square(), {seed, 0});
    const auto rho = IntensityModel::constant(x.plugin_intensity());
    const auto pairs = close_pairs(x, 0.0, 0.125, rho);
    for (int K : {1, 3, 6}) {
      const auto sys = VariationalSystem::assemble(pairs, basis, psi, K);
      const auto full = solve_system(sys.A(), sys.b());
      for (std::size_t m = 0; m < pairs.unordered().size(); m += 7) {
        const std::size_t k = pairs.unordered()[m];
        const auto d = downdate_pair(sys, full, k, pairs.partner(k));
        const auto [A, b] = downdated_system(sys, k, pairs.partner(k));
        const Eigen::VectorXd naive = solve_system(A, b).beta;
        CHECK((d.beta - naive).norm() <= 1e-10 * naive.norm());
      }
    }
  }
}

TEST_CASE("CV score equals the naive leave-pair-out computation") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto x = testing::uniform_pattern(Window::unit_square(), 40 + 10 * seed, 100 + seed);
    const auto rho = IntensityModel::constant(x.plugin_intensity());
    const CvContext ctx(x, rho, basis, psi);
    for (int K : {1, 2, 3}) {
      const double fast = cv_score(ctx, K);
      const double slow = naive_cv(x, rho, K);
      CHECK(fast == doctest::Approx(slow).epsilon(1e-9));
    }
  }
}

TEST_CASE("selection rule examples") {
  using R = SelectionRule;
  const std::vector<double> a{-5, -3, -4, -2};
  CHECK(apply_selection_rule(a, 4)->first == 2);
  CHECK(apply_selection_rule(a, 4)->second == R::first_local_max);
  // K = 2 needs no comparison with K = 1.
  const std::vector<double> b{0, -1, -3, -2.5, -4};
  CHECK(apply_selection_rule(b, 5)->first == 2);
  const std::vector<double> c{0, -3, -2, -2.5};
  CHECK(apply_selection_rule(c, 4)->first == 3);
  const std::vector<double> inc{1, 2, 3, 4, 5};
  CHECK(*apply_selection_rule(inc, 5) == std::pair{5, R::boundary_max});
  const std::vector<double> partial{1, 2, 3};
  CHECK(!apply_selection_rule(partial, 5));
  const std::vector<double> ties{0, 1, 1, 1};
  CHECK(apply_selection_rule(ties, 4)->first == 2);
  const std::vector<double> infeasible{0, ninf, ninf};
  CHECK(!apply_selection_rule(infeasible, 3));
  const std::vector<double> hole{0, ninf, 2, 1};
  CHECK(apply_selection_rule(hole, 4)->first == 3);
  const std::vector<double> down_end{0, ninf, 1, 2, ninf};
  CHECK(*apply_selection_rule(down_end, 5) == std::pair{4, R::first_local_max});
}

TEST_CASE("lazy and full scans pick the same K") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = simulate(ModelSpec::reference(ModelSpec::Kind::thomas), Window::unit_square(), {seed, 9});
    const CvContext ctx(x, IntensityModel::constant(x.plugin_intensity()), basis, psi);
    SelectOptions full;
    full.k_max = 12;
    full.full_curve = true;
    SelectOptions lazy = full;
    lazy.full_curve = false;
    const auto a = select_k(ctx, full), b = select_k(ctx, lazy);
    CHECK(a.selected == b.selected);
    CHECK(a.K.size() == 12);
    for (std::size_t i = 0; i < b.cv.size(); ++i) CHECK(a.cv[i] == b.cv[i]);
  }
}

TEST_CASE("selected K is invariant to the constant intensity scale") {
  const auto x = simulate(ModelSpec::reference(ModelSpec::Kind::thomas), Window::unit_square(), {4, 4});
  const auto rho = IntensityModel::constant(x.plugin_intensity());
  SelectOptions opt;
  opt.k_max = 10;
  opt.full_curve = true;
  const auto ref = select_k(CvContext(x, rho, basis, psi), opt);
  for (double c : {0.1, 10.0}) {
    const auto got = select_k(CvContext(x, rho.scaled(c), basis, psi), opt);
    CHECK(got.selected == ref.selected);
    const double shift = got.cv[0] - ref.cv[0];
    for (std::size_t i = 0; i < ref.cv.size(); ++i)
      CHECK(got.cv[i] - ref.cv[i] == doctest::Approx(shift).epsilon(1e-9).scale(std::abs(ref.cv[i])));
  }
}

TEST_CASE("pair integral against a Monte-Carlo double integral") {
  const Window w(0, 0, 1, 0.6);
  const auto g = [](double t) { return 1 + 3 * t; };
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ux(0, 1), uy(0, 0.6);

  SUBCASE("constant intensity") {
    const double rho = 50;
    const PairIntegrator integ(w, IntensityModel::constant(rho), 0.02, 0.125);
    std::vector<double> vals;
    for (int k = 0; k < 400000; ++k) {
      const double dx = ux(rng) - ux(rng), dy = uy(rng) - uy(rng);
      const double t = std::hypot(dx, dy);
      vals.push_back(t >= 0.02 && t <= 0.145 ? rho * rho * g(t) * w.area() * w.area() : 0.0);
    }
    const auto m = testing::moments(vals);
    CHECK(std::abs(integ.integrate(g) - m.mean) < 3 * m.se);
  }
  SUBCASE("raster intensity") {
    const IntensityRaster raster(w, 4, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    PairIntegrator::Options opt;
    opt.subdivision = 8;
    opt.angular_nodes = 64;
    const PairIntegrator integ(w, IntensityModel::per_point(raster), 0.0, 0.125, opt);
    std::vector<double> vals;
    for (int k = 0; k < 400000; ++k) {
      const Point u{ux(rng), uy(rng)}, v{ux(rng), uy(rng)};
      const double t = std::hypot(v.x - u.x, v.y - u.y);
      vals.push_back(t <= 0.125 ? raster.at(u) * raster.at(v) * g(t) * w.area() * w.area() : 0.0);
    }
    const auto m = testing::moments(vals);
    CHECK(std::abs(integ.integrate(g) - m.mean) < 3 * m.se + 0.01 * m.mean);
  }
}

TEST_CASE("per-point intensity without a raster cannot be integrated") {
  const Window w = Window::unit_square();
  CHECK_THROWS_AS(PairIntegrator(w, IntensityModel::per_point(), 0.0, 0.1), InvalidArgument);
  const IntensityRaster other(Window(0, 0, 2, 2), 1, 1, {1.0});
  CHECK_THROWS_AS(PairIntegrator(w, IntensityModel::per_point(other), 0.0, 0.1), InvalidArgument);
}

TEST_CASE("fit_vse_auto on a clustered pattern") {
  const auto x = simulate(ModelSpec::reference(ModelSpec::Kind::thomas), Window::square(2), {5, 1});
  const CvContext ctx(x, IntensityModel::constant(x.plugin_intensity()), basis, psi);
  const auto fit = fit_vse_auto(ctx);
  CHECK(fit.curve.selected >= 2);
  CHECK(fit.coefficients.K() == fit.curve.selected);
  CHECK(fit.coefficients.g(0.0) > 2.0);
  for (double r = 0; r <= 0.125; r += 0.005) CHECK(fit.coefficients.g(r) > 0);
}

TEST_CASE("no pairs in range") {
  const PointPattern x(Window::unit_square(), {{0.1, 0.1}, {0.9, 0.9}});
  const CvContext ctx(x, IntensityModel::constant(2), basis, psi);
  CHECK_THROWS_AS(select_k(ctx), InvalidArgument);
}

}
