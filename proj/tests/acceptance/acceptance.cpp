// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failures (capped at 1).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vsepcf/bench.hpp"
#include "vsepcf/quadrature.hpp"
#include "vsepcf/select.hpp"
#include "vsepcf/simulate.hpp"

using namespace vsepcf;

namespace {

const double R = 0.125;
std::size_t replicates = 500;
int failures = 0;

struct Moments {
  double mean = 0;
  double se = 0;
};

Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double m = 0;
  for (double v : x) m += v;
  m /= n;
  double s2 = 0;
  for (double v : x) s2 += (v - m) * (v - m);
  return {m, std::sqrt(s2 / (n - 1) / n)};
}

void report(int id, bool ok, const std::string& what, double seconds) {
  std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class F>
void run(int id, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string what;
  bool ok = false;
  try {
    ok = body(what);
  } catch (const std::exception& e) {
    what += std::string(" exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(id, ok, what, s);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool basis_correctness(std::string& what) {
  const BasisSpec basis(R, 0.0, 20);
  const auto rule = gauss_legendre_on(0, R, 512);
  double worst = 0;
  for (int k = 1; k <= 20; ++k)
    for (int l = k; l <= 20; ++l) {
      double g = 0;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        g += rule.weights[q] * rule.nodes[q] * basis.eval(k, rule.nodes[q]).value *
             basis.eval(l, rule.nodes[q]).value;
      worst = std::max(worst, std::abs(g - (k == l ? 1.0 : 0.0)));
    }
  double root = 0;
  for (int k = 1; k <= 100; ++k) root = std::max(root, std::abs(bessel_j0(bessel_zero(0, k))));
  what = fmt("max |Gram - I| = %.2e, max |J0(alpha_k)| = %.2e", worst, root);
  return worst < 1e-6 && root < 1e-12;
}

bool unbiased_b(std::string& what) {
  const int K = 5;
  const BasisSpec basis(R, 0.0, 25);
  const PsiSpec psi(R);
  std::vector<std::vector<double>> b(K);
  for (std::size_t rep = 0; rep < replicates; ++rep) {
    const auto x = sim_poisson(Window::unit_square(), 200, {1002, rep});
    const auto sys =
        VariationalSystem::assemble(close_pairs(x, 0, R, IntensityModel::constant(200)), basis, psi, K);
    for (int k = 0; k < K; ++k) b[k].push_back(sys.b()(k));
  }
  bool ok = true;
  what = "mean(b)/se:";
  for (int k = 0; k < K; ++k) {
    const auto m = moments(b[k]);
    what += fmt(" %.2f", m.mean / m.se);
    ok = ok && std::abs(m.mean) < 3 * m.se;
  }
  return ok;
}

bool variational_identity(std::string& what) {
  const auto model = ModelSpec::reference(ModelSpec::Kind::thomas);
  const BasisSpec basis(R, 0.0, 25);
  const PsiSpec psi(R);
  const RadialTestFunction h{
      [&](double t) { return -psi.eval(t).value * basis.eval(1, t).d1; },
      [&](double t) {
        const auto p = psi.eval(t);
        const auto f = basis.eval(1, t);
        return -(p.d1 * f.d1 + p.value * f.d2);
      },
      0.0, R};
  std::vector<PointPattern> reps;
  for (std::size_t rep = 0; rep < replicates; ++rep)
    reps.push_back(simulate(model, Window::unit_square(), {1003, rep}));
  const auto chk = variational_residual(reps, h, [&](double t) { return true_dlog_pcf(model, t); },
                                        IntensityModel::constant(model.intensity()),
                                        Weighting::inverse_distance);
  const double combined = std::hypot(chk.lhs_se, chk.rhs_se);
  what = fmt("lhs %.4f, rhs %.4f, |diff| %.4f, combined se %.4f (paired se %.4f)", chk.lhs_mean,
             chk.rhs_mean, std::abs(chk.lhs_mean - chk.rhs_mean), combined, chk.diff_se);
  return std::abs(chk.lhs_mean - chk.rhs_mean) < 3 * combined;
}

BenchReport vse_report;
BenchReport baseline_report;

BenchConfig study_config(std::vector<Estimator> estimators) {
  BenchConfig c;
  c.replicates = replicates;
  c.seed = 2024;
  c.range = R;
  c.estimators = std::move(estimators);
  return c;
}

const EstimatorSummary& row(const BenchReport& r, const std::string& cell, Estimator e) {
  for (const auto& x : r.rows)
    if (x.cell == cell && x.estimator == e) return x;
  throw std::runtime_error("missing row " + cell);
}

bool table_vse(std::string& what) {
  auto c = study_config({Estimator::vse});
  for (auto kind : {ModelSpec::Kind::poisson, ModelSpec::Kind::thomas,
                    ModelSpec::Kind::variance_gamma})
    for (double side : {1.0, 2.0}) c.cells.push_back({ModelSpec::reference(kind), Window::square(side)});
  vse_report = run_benchmark(c);
  const std::vector<std::pair<std::string, double>> targets{
      {"poisson_1x1", 0.051}, {"poisson_2x2", 0.024}, {"thomas_2x2", 0.063}};
  bool ok = true;
  for (const auto& [cell, target] : targets) {
    const auto& r = row(vse_report, cell, Estimator::vse);
    const double rel = r.root_mise_uniform / target - 1;
    ok = ok && std::abs(rel) <= 0.35;
    what += fmt("%s %.4f vs %.3f (%+.0f%%, basis-weighted %.4f); ", cell.c_str(),
                r.root_mise_uniform, target, 100 * rel, r.root_mise);
  }
  return ok;
}

bool selected_k(std::string& what) {
  bool ok = true;
  for (const auto& [cell, centre] :
       std::vector<std::pair<std::string, double>>{{"poisson_1x1", 2.2}, {"poisson_2x2", 2.2},
                                                   {"thomas_1x1", 2.9}, {"thomas_2x2", 2.9}}) {
    const double k = row(vse_report, cell, Estimator::vse).mean_selection;
    ok = ok && std::abs(k - centre) <= 1.0;
    what += fmt("%s mean K %.2f (bracket %.1f +- 1); ", cell.c_str(), k, centre);
  }
  return ok;
}

bool positivity(std::string& what) {
  std::size_t fits = 0, violations = 0, na = 0;
  double min_g = INFINITY;
  for (const auto& r : vse_report.rows) {
    fits += r.replicates - r.failures;
    na += r.failures;
    violations += r.positivity_violations;
    min_g = std::min(min_g, r.min_g);
  }
  what = fmt("%zu VSE fits over %zu cells, %zu failed fits, %zu violations, smallest g %.3g", fits,
             vse_report.rows.size(), na, violations, min_g);
  return violations == 0 && min_g > 0;
}

bool oracles(std::string& what) {
  const BasisSpec basis(R, 0.0, 25);
  const PsiSpec psi(R);
  const auto model = ModelSpec::reference(ModelSpec::Kind::thomas);

  double sm = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto x = simulate(model, Window::unit_square(), {1007, s});
    const auto pairs = close_pairs(x, 0, R, IntensityModel::constant(x.plugin_intensity()));
    for (int K : {2, 4, 8}) {
      const auto sys = VariationalSystem::assemble(pairs, basis, psi, K);
      const auto full = solve_system(sys.A(), sys.b());
      for (std::size_t m = 0; m < pairs.unordered().size(); m += 5) {
        const std::size_t k = pairs.unordered()[m];
        const auto d = downdate_pair(sys, full, k, pairs.partner(k));
        const auto [A, b] = downdated_system(sys, k, pairs.partner(k));
        const Eigen::VectorXd naive = solve_system(A, b).beta;
        sm = std::max(sm, (d.beta - naive).norm() / naive.norm());
      }
    }
  }

  bool grid_exact = true;
  std::size_t compared = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Window w(0, 0, 1.5, 0.8);
    auto x = simulate(ModelSpec::thomas(25, 8 + s, 0.02), w, {1017, s});
    const double lo = s % 2 ? 0.01 : 0.0, hi = 0.05 + 0.02 * s;
    const auto pairs = close_pairs(x, lo, hi, IntensityModel::constant(1));
    std::set<std::pair<std::size_t, std::size_t>> got, want;
    for (const auto& p : pairs.pairs()) got.insert({p.i, p.j});
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (i == j) continue;
        const double t = std::hypot(x[j].x - x[i].x, x[j].y - x[i].y);
        if (t >= lo && t <= hi) want.insert({i, j});
      }
    grid_exact = grid_exact && got == want && got.size() == pairs.size();
    compared += want.size();
  }

  double ext = 0;
  {
    const auto x = simulate(model, Window::square(2), {1027, 0});
    const auto pairs = close_pairs(x, 0, R, IntensityModel::constant(x.plugin_intensity()));
    auto sys = VariationalSystem::assemble(pairs, basis, psi, 1);
    for (int K = 2; K <= 25; ++K) {
      sys = sys.extended();
      const auto ref = VariationalSystem::assemble(pairs, basis, psi, K);
      ext = std::max({ext, (sys.A() - ref.A()).norm() / ref.A().norm(),
                      (sys.b() - ref.b()).norm() / ref.b().norm()});
    }
  }

  const Window w(0, 0, 1, 0.6);
  const double rho = 50;
  const auto g = [](double t) { return 1 + 3 * t; };
  const PairIntegrator integ(w, IntensityModel::constant(rho), 0.02, R);
  std::mt19937_64 rng(1037);
  std::uniform_real_distribution<double> ux(0, 1), uy(0, 0.6);
  std::vector<double> vals;
  for (int k = 0; k < 1000000; ++k) {
    const double t = std::hypot(ux(rng) - ux(rng), uy(rng) - uy(rng));
    vals.push_back(t >= 0.02 && t <= 0.02 + R ? rho * rho * g(t) * w.area() * w.area() : 0.0);
  }
  const auto mc = moments(vals);
  const double quad = integ.integrate(g);

  what = fmt("downdate rel %.1e; grid %s over %zu pairs; extension rel %.1e; pair integral %.3f vs MC "
             "%.3f +- %.3f",
             sm, grid_exact ? "exact" : "MISMATCH", compared, ext, quad, mc.mean, mc.se);
  return sm <= 1e-10 && grid_exact && ext <= 1e-12 && std::abs(quad - mc.mean) < 3 * mc.se;
}

bool invariance(std::string& what) {
  const BasisSpec basis(R, 0.0, 25);
  const PsiSpec psi(R);
  double worst = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = simulate(ModelSpec::reference(ModelSpec::Kind::thomas), Window::unit_square(), {1008, s});
    const auto base = IntensityModel::constant(x.plugin_intensity());
    const auto ref =
        solve_beta(VariationalSystem::assemble(close_pairs(x, 0, R, base), basis, psi, 5));
    for (double c : {0.1, 1.0, 10.0}) {
      const auto got = solve_beta(
          VariationalSystem::assemble(close_pairs(x, 0, R, base.scaled(c)), basis, psi, 5));
      worst = std::max(worst, (got.beta - ref.beta).norm() / ref.beta.norm());
    }
  }
  what = fmt("max relative change in beta %.1e", worst);
  return worst <= 1e-12;
}

bool sensitivity_check(std::string& what) {
  const int K = 4;
  const BasisSpec basis(R, 0.0, 25);
  const PsiSpec psi(R);
  const double rho = 200;
  const auto S = sensitivity(basis, psi, K, Weighting::inverse_distance, [](double) { return 1.0; });
  std::vector<std::vector<double>> a(K * K);
  for (std::size_t rep = 0; rep < replicates; ++rep) {
    const auto x = sim_poisson(Window::unit_square(), rho, {1009, rep});
    const auto sys =
        VariationalSystem::assemble(close_pairs(x, 0, R, IntensityModel::constant(rho)), basis, psi, K);
    for (int i = 0; i < K * K; ++i) a[i].push_back(sys.A()(i / K, i % K));
  }
  Eigen::MatrixXd mean(K, K);
  double worst = 0;
  for (int i = 0; i < K * K; ++i) {
    const auto m = moments(a[i]);
    mean(i / K, i % K) = m.mean;
    worst = std::max(worst, std::abs(m.mean - S(i / K, i % K)) / m.se);
  }
  const double eig_s = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff();
  const double eig_m = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(mean).eigenvalues().minCoeff();
  what = fmt("max |E_MC[A] - S|/se %.2f; min eigenvalue S %.3g, E_MC[A] %.3g", worst, eig_s, eig_m);
  return worst < 3 && eig_s >= 0 && eig_m >= 0;
}

bool baselines(std::string& what) {
  auto c = study_config({Estimator::ose, Estimator::kde});
  c.cells.push_back({ModelSpec::reference(ModelSpec::Kind::poisson), Window::square(2)});
  baseline_report = run_benchmark(c);
  bool ok = true;
  for (const auto& [e, target] :
       std::vector<std::pair<Estimator, double>>{{Estimator::ose, 0.012}, {Estimator::kde, 0.037}}) {
    const auto& r = row(baseline_report, "poisson_2x2", e);
    const double rel = r.root_mise_uniform / target - 1;
    ok = ok && std::abs(rel) <= 0.5;
    what += fmt("%s %.4f vs %.3f (%+.0f%%, basis-weighted %.4f); ", to_string(e).c_str(),
                r.root_mise_uniform, target, 100 * rel, r.root_mise);
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) replicates = std::strtoul(argv[1], nullptr, 10);
  if (replicates < 2) {
    std::fprintf(stderr, "usage: acceptance [replicates]\n");
    return 2;
  }
  run(1, basis_correctness);
  run(2, unbiased_b);
  run(3, variational_identity);
  run(4, table_vse);
  run(5, selected_k);
  run(6, positivity);
  run(7, oracles);
  run(8, invariance);
  run(9, sensitivity_check);
  run(10, baselines);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
