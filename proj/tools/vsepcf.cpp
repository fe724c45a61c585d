// vsepcf: simulate point patterns, fit pair correlation functions, run the
// simulation study.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "vsepcf/baselines.hpp"
#include "vsepcf/bench.hpp"
#include "vsepcf/error.hpp"
#include "vsepcf/io.hpp"
#include "vsepcf/select.hpp"
#include "vsepcf/simulate.hpp"

using namespace vsepcf;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_numerical = 2;

struct PatternArgs {
  std::string pattern;
  std::string window;
  std::string intensity = "constant:plugin";
  std::string raster;
  double r_min = 0;
  double range = 0.125;
};

void add_pattern_options(CLI::App* cmd, PatternArgs& a) {
  cmd->add_option("--pattern", a.pattern, "Point pattern CSV (x,y[,intensity])")->required();
  cmd->add_option("--window", a.window, "Observation window x0,y0,x1,y1")->required();
  cmd->add_option("--intensity", a.intensity,
                  "constant:<value> | constant:plugin | column");
  cmd->add_option("--intensity-raster", a.raster,
                  "Intensity raster CSV, needed for cross-validation in column mode");
  cmd->add_option("--rmin", a.r_min, "Lower end of the distance range");
  cmd->add_option("--R", a.range, "Length of the distance range");
}

struct LoadedPattern {
  PointPattern pattern;
  IntensityModel intensity;
  IntensityDescriptor descriptor;
};

LoadedPattern load_pattern(const PatternArgs& a) {
  const Window window = parse_window(a.window);
  PointPattern pattern = read_pattern_csv(a.pattern, window);
  if (a.intensity == "column") {
    if (!pattern.has_intensity())
      throw InvalidArgument("--intensity column needs an 'intensity' column in the pattern");
    std::optional<IntensityRaster> raster;
    if (!a.raster.empty()) raster = read_raster_csv(a.raster, window);
    return {std::move(pattern), IntensityModel::per_point(std::move(raster)), {"column", 0}};
  }
  if (a.intensity.rfind("constant:", 0) != 0)
    throw InvalidArgument("--intensity must be constant:<value>, constant:plugin or column");
  const std::string v = a.intensity.substr(9);
  if (v == "plugin") {
    const double rho = pattern.plugin_intensity();
    if (!(rho > 0)) throw InvalidArgument("constant:plugin needs a non-empty pattern");
    return {std::move(pattern), IntensityModel::constant(rho), {"plugin", rho}};
  }
  std::size_t used = 0;
  double rho = 0;
  try {
    rho = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !(rho > 0))
    throw InvalidArgument("constant intensity must be a positive number");
  return {std::move(pattern), IntensityModel::constant(rho), {"constant", rho}};
}

void check_cv_possible(const LoadedPattern& lp) {
  if (!lp.intensity.is_constant() && !lp.intensity.raster())
    throw InvalidArgument("automatic selection in column mode needs --intensity-raster");
}

void write_curve(const std::string& path, const AnyFit& fit, std::size_t points) {
  const auto r = curve_grid(fit, points);
  std::vector<double> g;
  g.reserve(r.size());
  for (double x : r) g.push_back(evaluate_g(fit, x));
  if (path == "-") write_columns_csv(std::cout, {"r", "g_est"}, {r, g});
  else write_columns_csv(std::filesystem::path(path), {"r", "g_est"}, {r, g});
}

void write_cv(const std::string& path, const std::vector<double>& x, const std::vector<double>& cv,
              const std::string& name) {
  if (path.empty()) return;
  if (path == "-") write_columns_csv(std::cout, {name, "cv"}, {x, cv});
  else write_columns_csv(std::filesystem::path(path), {name, "cv"}, {x, cv});
}

int parse_k(const std::string& s) {
  std::size_t used = 0;
  int k = 0;
  try {
    k = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw InvalidArgument("--K must be an integer or 'auto'");
  return k;
}

double parse_bandwidth(const std::string& s) {
  std::size_t used = 0;
  double h = 0;
  try {
    h = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw InvalidArgument("--bandwidth must be a number or 'auto'");
  return h;
}

std::vector<double> as_double(const std::vector<int>& v) { return {v.begin(), v.end()}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pair correlation function estimation for planar point patterns"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vsepcf 0.1.0");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a point pattern");
  std::string sim_model = "poisson", sim_window = "0,0,1,1", sim_out;
  std::uint64_t sim_seed = 1, sim_stream = 0;
  std::optional<double> p_rho, p_kappa, p_mu, p_omega, p_nu;
  sim->add_option("--model", sim_model, "poisson | thomas | variance-gamma");
  sim->add_option("--window", sim_window, "x0,y0,x1,y1");
  sim->add_option("--seed", sim_seed);
  sim->add_option("--stream", sim_stream);
  sim->add_option("--rho", p_rho);
  sim->add_option("--kappa", p_kappa);
  sim->add_option("--mu", p_mu);
  sim->add_option("--omega", p_omega);
  sim->add_option("--nu", p_nu);
  sim->add_option("--out", sim_out, "Pattern CSV; a .json sidecar is written next to it")
      ->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Estimate the pair correlation function");
  PatternArgs fa;
  std::string estimator = "vse", k_text = "auto", h_text = "auto", fit_out, curve_out, cv_out;
  std::string weighting = "inverse-distance", divisor = "distance";
  int k_max = BasisSpec::default_k_max;
  std::size_t points = 200;
  add_pattern_options(fit, fa);
  fit->add_option("--estimator", estimator, "vse | ose | kde");
  fit->add_option("--K", k_text, "Truncation, or 'auto' for cross-validation");
  fit->add_option("--kmax", k_max, "Largest K considered");
  fit->add_option("--bandwidth", h_text, "KDE bandwidth, or 'auto'");
  fit->add_option("--weighting", weighting, "inverse-distance | plain");
  fit->add_option("--kde-divisor", divisor, "distance | radius");
  fit->add_option("--out", fit_out, "Fit JSON")->required();
  fit->add_option("--curve", curve_out, "Curve CSV r,g_est ('-' for stdout)");
  fit->add_option("--cv-out", cv_out, "Cross-validation curve CSV");
  fit->add_option("--points", points, "Curve points");

  // cv
  auto* cv = app.add_subcommand("cv", "Cross-validation curve over K");
  PatternArgs ca;
  std::string cv_estimator = "vse", cv_path = "-", cv_weighting = "inverse-distance";
  int cv_kmax = BasisSpec::default_k_max;
  add_pattern_options(cv, ca);
  cv->add_option("--estimator", cv_estimator, "vse | ose");
  cv->add_option("--kmax", cv_kmax);
  cv->add_option("--weighting", cv_weighting);
  cv->add_option("--out", cv_path, "K,cv CSV ('-' for stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a replicated simulation study");
  std::string bench_config, bench_csv, bench_json, bench_curves;
  std::optional<std::size_t> bench_threads, bench_reps;
  bench->add_option("--config", bench_config, "Config file")->required();
  bench->add_option("--csv", bench_csv, "Report CSV");
  bench->add_option("--json", bench_json, "Report JSON");
  bench->add_option("--curves", bench_curves, "Directory for mean-curve CSVs");
  bench->add_option("--threads", bench_threads);
  bench->add_option("--replicates", bench_reps);

  // pcf-eval
  auto* eval = app.add_subcommand("pcf-eval", "Evaluate a saved fit");
  std::string eval_fit, eval_out = "-";
  std::size_t eval_points = 200;
  eval->add_option("--fit", eval_fit, "Fit JSON")->required();
  eval->add_option("--out", eval_out, "Curve CSV ('-' for stdout)");
  eval->add_option("--points", eval_points);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (*sim) {
      ModelSpec m = ModelSpec::reference(model_kind_from_string(sim_model));
      if (p_rho) m.rho = *p_rho;
      if (p_kappa) m.kappa = *p_kappa;
      if (p_mu) m.mu = *p_mu;
      if (p_omega) m.omega = *p_omega;
      if (p_nu) m.nu = *p_nu;
      m.validate();
      const Window w = parse_window(sim_window);
      const PointPattern x = simulate(m, w, {sim_seed, sim_stream});
      write_pattern_csv(std::filesystem::path(sim_out), x);
      nlohmann::json side{{"model", to_string(m.kind)},
                          {"parameters",
                           {{"rho", m.rho}, {"kappa", m.kappa}, {"mu", m.mu},
                            {"omega", m.omega}, {"nu", m.nu}}},
                          {"intensity", m.intensity()},
                          {"window", format_window(w)},
                          {"seed", sim_seed},
                          {"stream", sim_stream},
                          {"points", x.size()}};
      std::ofstream(std::filesystem::path(sim_out).replace_extension(".json"))
          << side.dump(2) << '\n';
      std::cout << x.size() << " points written to " << sim_out << '\n';
    } else if (*fit) {
      const LoadedPattern lp = load_pattern(fa);
      const BasisSpec basis(fa.range, fa.r_min, k_max);
      std::optional<AnyFit> result;
      if (estimator == "vse") {
        const PsiSpec psi(fa.r_min + fa.range);
        const Weighting wt = weighting_from_string(weighting);
        if (k_text == "auto") {
          check_cv_possible(lp);
          const CvContext ctx(lp.pattern, lp.intensity, basis, psi, wt);
          SelectOptions opts;
          opts.k_max = k_max;
          opts.full_curve = !cv_out.empty();
          VseFit f = fit_vse_auto(ctx, lp.descriptor, opts);
          std::cout << "K = " << f.curve.selected << " (" << to_string(f.curve.rule) << ")\n";
          write_cv(cv_out, as_double(f.curve.K), f.curve.cv, "K");
          result = std::move(f.coefficients);
        } else {
          const int K = parse_k(k_text);
          result = fit_vse(lp.pattern, lp.intensity, basis, psi, K, wt, lp.descriptor);
        }
      } else if (estimator == "ose") {
        if (k_text == "auto") {
          check_cv_possible(lp);
          const OseContext ctx(lp.pattern, lp.intensity, basis);
          OseSelection s = ose_fit_auto(ctx, lp.descriptor, k_max);
          std::cout << "K = " << s.curve.selected << " (" << to_string(s.curve.rule) << ")\n";
          write_cv(cv_out, as_double(s.curve.K), s.curve.cv, "K");
          result = std::move(s.fit);
        } else {
          result = ose_fit(lp.pattern, lp.intensity, basis, parse_k(k_text), lp.descriptor);
        }
      } else if (estimator == "kde") {
        const KdeDivisor div = kde_divisor_from_string(divisor);
        if (h_text == "auto") {
          check_cv_possible(lp);
          KdeOptions opts;
          opts.divisor = div;
          KdeSelection s = kde_fit_auto(lp.pattern, lp.intensity, fa.r_min, fa.range, opts,
                                        lp.descriptor);
          std::cout << "h = " << format_double(s.fit.bandwidth) << '\n';
          write_cv(cv_out, s.bandwidths, s.cv, "h");
          result = std::move(s.fit);
        } else {
          result = kde_fit(lp.pattern, lp.intensity, fa.r_min, fa.range, parse_bandwidth(h_text), div,
                           lp.descriptor);
        }
      } else {
        throw InvalidArgument("--estimator must be vse, ose or kde");
      }
      write_fit_json(fit_out, *result);
      if (!curve_out.empty()) write_curve(curve_out, *result, points);
    } else if (*cv) {
      const LoadedPattern lp = load_pattern(ca);
      check_cv_possible(lp);
      const BasisSpec basis(ca.range, ca.r_min, cv_kmax);
      std::vector<double> ks, values;
      if (cv_estimator == "vse") {
        const CvContext ctx(lp.pattern, lp.intensity, basis, PsiSpec(ca.r_min + ca.range),
                            weighting_from_string(cv_weighting));
        SelectOptions opts;
        opts.k_max = cv_kmax;
        opts.full_curve = true;
        const CvCurve c = select_k(ctx, opts);
        ks = as_double(c.K);
        values = c.cv;
      } else if (cv_estimator == "ose") {
        const OseContext ctx(lp.pattern, lp.intensity, basis);
        const OseSelection s = ose_fit_auto(ctx, {}, cv_kmax);
        ks = as_double(s.curve.K);
        values = s.curve.cv;
      } else {
        throw InvalidArgument("--estimator must be vse or ose");
      }
      write_cv(cv_path, ks, values, "K");
    } else if (*bench) {
      BenchConfig cfg = read_bench_config(bench_config);
      if (bench_threads) cfg.threads = *bench_threads;
      if (bench_reps) cfg.replicates = *bench_reps;
      cfg.validate();
      std::cout << "seed " << cfg.seed << ", " << cfg.replicates << " replicates\n";
      for (std::size_t c = 0; c < cfg.cells.size(); ++c)
        std::cout << "cell " << c << ": " << cfg.cells[c].label() << " window "
                  << format_window(cfg.cells[c].window) << " streams " << replicate_stream(c, 0)
                  << ".." << replicate_stream(c, cfg.replicates - 1) << '\n';
      const BenchReport report = run_benchmark(cfg);
      if (!bench_csv.empty()) {
        std::ofstream out(bench_csv);
        if (!out) throw InvalidArgument("cannot write " + bench_csv);
        write_report_csv(out, report);
      } else {
        write_report_csv(std::cout, report);
      }
      if (!bench_json.empty()) {
        std::ofstream out(bench_json);
        if (!out) throw InvalidArgument("cannot write " + bench_json);
        write_report_json(out, report);
      }
      if (!bench_curves.empty()) write_mean_curves(bench_curves, report);
    } else if (*eval) {
      write_curve(eval_out, read_fit_json(eval_fit), eval_points);
    }
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_input;
  }
  return exit_ok;
}
