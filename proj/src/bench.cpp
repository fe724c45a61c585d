#include "vsepcf/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "vsepcf/error.hpp"
#include "vsepcf/io.hpp"
#include "vsepcf/quadrature.hpp"

namespace vsepcf {

namespace {

constexpr std::size_t ise_nodes = 256;

double ise_weight(IseWeight w, double r, double r_min) {
  return w == IseWeight::basis ? 2 * std::numbers::pi * (r - r_min) : 1.0;
}

}  // namespace

// ------------------------------------------------------------------ ISE

std::optional<double> ise(const std::function<double(double)>& log_estimate,
                          const std::function<double(double)>& log_truth, double r_min,
                          double range, IseWeight weight) {
  return IseIntegrator(log_truth, r_min, range)(log_estimate, weight);
}

IseIntegrator::IseIntegrator(const std::function<double(double)>& log_truth, double r_min,
                             double range)
    : r_min_(r_min) {
  if (!(range > 0) || !(r_min >= 0)) throw InvalidArgument("ise: invalid range");
  const auto rule = gauss_legendre_on(r_min, r_min + range, ise_nodes);
  nodes_ = rule.nodes;
  weights_ = rule.weights;
  truth_.reserve(nodes_.size());
  for (double r : nodes_) {
    const double v = log_truth(r);
    truth_ok_ = truth_ok_ && std::isfinite(v);
    truth_.push_back(v);
  }
}

std::optional<double> IseIntegrator::operator()(
    const std::function<double(double)>& log_estimate, IseWeight weight) const {
  if (!truth_ok_) return std::nullopt;
  double sum = 0;
  for (std::size_t q = 0; q < nodes_.size(); ++q) {
    const double est = log_estimate(nodes_[q]);
    if (!std::isfinite(est)) return std::nullopt;
    const double d = est - truth_[q];
    sum += weights_[q] * ise_weight(weight, nodes_[q], r_min_) * d * d;
  }
  return sum;
}

// --------------------------------------------------------------- config

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::vse: return "vse";
    case Estimator::ose: return "ose";
    case Estimator::kde: return "kde";
  }
  return "?";
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "vse") return Estimator::vse;
  if (s == "ose") return Estimator::ose;
  if (s == "kde") return Estimator::kde;
  throw InvalidArgument("unknown estimator '" + s + "' (expected vse, ose or kde)");
}

std::string BenchCell::label() const {
  std::ostringstream s;
  s << to_string(model.kind) << '_' << format_double(window.width()) << 'x'
    << format_double(window.height());
  if (r_min != 0) s << "_rmin" << format_double(r_min);
  return s.str();
}

void BenchConfig::validate() const {
  if (cells.empty()) throw InvalidArgument("bench config: no cells");
  if (replicates < 1) throw InvalidArgument("bench config: replicates must be >= 1");
  if (estimators.empty()) throw InvalidArgument("bench config: no estimators");
  if (!(range > 0)) throw InvalidArgument("bench config: R must be positive");
  if (k_max < 2) throw InvalidArgument("bench config: k_max must be >= 2");
  if (curve_points < 2) throw InvalidArgument("bench config: curve_points must be >= 2");
  for (const auto& c : cells) {
    c.model.validate();
    if (c.r_min < 0) throw InvalidArgument("bench config: r_min must be >= 0");
    if (c.r_min + range > c.window.min_side())
      throw InvalidArgument("bench config: r_min + R exceeds the window side in " + c.label());
    if (!c.load_dir && !c.model.can_simulate())
      throw InvalidArgument("bench config: " + to_string(c.model.kind) +
                            " cannot be simulated; give load=<dir>");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty())
    throw InvalidArgument("bench config: '" + key + "' needs a number, got '" + v + "'");
  return x;
}

std::uint64_t to_unsigned(const std::string& v, const std::string& key) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidArgument("bench config: '" + key + "' needs a non-negative integer");
  return std::stoull(v);
}

void set_model_parameter(ModelSpec& m, const std::string& name, double value) {
  if (name == "rho") m.rho = value;
  else if (name == "kappa") m.kappa = value;
  else if (name == "mu") m.mu = value;
  else if (name == "omega") m.omega = value;
  else if (name == "nu") m.nu = value;
  else if (name == "alpha") m.alpha = value;
  else throw InvalidArgument("bench config: unknown model parameter '" + name + "'");
}

}  // namespace

BenchConfig parse_bench_config(std::istream& in) {
  BenchConfig cfg;
  cfg.cells.clear();
  std::map<ModelSpec::Kind, std::vector<std::pair<std::string, double>>> overrides;
  struct RawCell {
    ModelSpec::Kind kind;
    Window window;
    double r_min;
    bool r_min_set;
    std::optional<std::filesystem::path> load;
  };
  std::vector<RawCell> raw;
  bool r_min_default_set = false;
  double r_min_default = 0;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("bench config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "replicates") cfg.replicates = to_unsigned(value, key);
    else if (key == "seed") cfg.seed = to_unsigned(value, key);
    else if (key == "threads") cfg.threads = to_unsigned(value, key);
    else if (key == "R") cfg.range = to_double(value, key);
    else if (key == "r_min") {
      r_min_default = to_double(value, key);
      r_min_default_set = true;
    } else if (key == "k_max") cfg.k_max = static_cast<int>(to_unsigned(value, key));
    else if (key == "curve_points") cfg.curve_points = to_unsigned(value, key);
    else if (key == "outlier_ratio") cfg.outlier_ratio = to_double(value, key);
    else if (key == "estimators") {
      cfg.estimators.clear();
      std::istringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.estimators.push_back(estimator_from_string(trim(item)));
    } else if (key == "intensity") {
      if (value == "plugin") cfg.true_intensity = false;
      else if (value == "true") cfg.true_intensity = true;
      else throw InvalidArgument("bench config: intensity must be plugin or true");
    } else if (key == "weighting") cfg.weighting = weighting_from_string(value);
    else if (key == "kde_divisor") cfg.kde_divisor = kde_divisor_from_string(value);
    else if (key == "cell") {
      std::istringstream ss(value);
      std::string model, window, opt;
      if (!(ss >> model >> window))
        throw InvalidArgument("bench config line " + std::to_string(lineno) +
                              ": cell needs '<model> x0,y0,x1,y1'");
      RawCell c{model_kind_from_string(model), parse_window(window), 0, false, std::nullopt};
      while (ss >> opt) {
        if (opt.rfind("rmin=", 0) == 0) {
          c.r_min = to_double(opt.substr(5), "rmin");
          c.r_min_set = true;
        } else if (opt.rfind("load=", 0) == 0) {
          c.load = opt.substr(5);
        } else {
          throw InvalidArgument("bench config: unknown cell option '" + opt + "'");
        }
      }
      raw.push_back(std::move(c));
    } else if (const auto dot = key.find('.'); dot != std::string::npos) {
      overrides[model_kind_from_string(key.substr(0, dot))].emplace_back(
          key.substr(dot + 1), to_double(value, key));
    } else {
      throw InvalidArgument("bench config: unknown key '" + key + "'");
    }
  }
  for (auto& c : raw) {
    ModelSpec m = ModelSpec::reference(c.kind);
    for (const auto& [name, v] : overrides[c.kind]) set_model_parameter(m, name, v);
    double r_min = c.r_min_set ? c.r_min : r_min_default_set ? r_min_default : 0.0;
    cfg.cells.push_back({m, c.window, r_min, c.load});
  }
  cfg.validate();
  return cfg;
}

BenchConfig read_bench_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open bench config '" + path.string() + "'");
  return parse_bench_config(in);
}

// ------------------------------------------------------------------ run

ReplicateResult run_replicate(const BenchConfig& config, const BenchCell& cell,
                              Estimator estimator, const PointPattern& pattern,
                              const IseIntegrator& ise_integrator,
                              const std::vector<double>& curve_r) {
  ReplicateResult out;
  try {
    const double rho = config.true_intensity ? cell.model.intensity() : pattern.plugin_intensity();
    if (!(rho > 0)) throw InvalidArgument("empty pattern");
    const IntensityModel intensity = IntensityModel::constant(rho);
    const IntensityDescriptor descriptor{config.true_intensity ? "constant" : "plugin", rho};
    const BasisSpec basis(config.range, cell.r_min, config.k_max);

    std::function<double(double)> g;
    std::optional<VseCoefficients> vse;
    std::optional<OseFit> ose;
    std::optional<KdeFit> kde;
    switch (estimator) {
      case Estimator::vse: {
        const CvContext context(pattern, intensity, basis, PsiSpec(cell.r_min + config.range),
                                config.weighting);
        SelectOptions opts;
        opts.k_max = config.k_max;
        VseFit fit = fit_vse_auto(context, descriptor, opts);
        out.selection = fit.curve.selected;
        vse = std::move(fit.coefficients);
        g = [&](double r) { return vse->g(r); };
        break;
      }
      case Estimator::ose: {
        const OseContext context(pattern, intensity, basis);
        OseSelection sel = ose_fit_auto(context, descriptor, config.k_max);
        out.selection = sel.curve.selected;
        ose = std::move(sel.fit);
        g = [&](double r) { return ose->g(r); };
        break;
      }
      case Estimator::kde: {
        KdeOptions opts;
        opts.divisor = config.kde_divisor;
        KdeSelection sel = kde_fit_auto(pattern, intensity, cell.r_min, config.range, opts, descriptor);
        out.selection = sel.fit.bandwidth;
        kde = std::move(sel.fit);
        g = [&](double r) { return kde->g(r); };
        break;
      }
    }
    const auto log_est = [&](double r) {
      if (vse) return vse->log_g(r);
      const double v = g(r);
      return v > 0 ? std::log(v) : std::numeric_limits<double>::quiet_NaN();
    };
    out.ise_basis = ise_integrator(log_est, IseWeight::basis);
    out.ise_uniform = ise_integrator(log_est, IseWeight::uniform);
    out.curve.reserve(curve_r.size());
    out.min_g = std::numeric_limits<double>::infinity();
    for (double r : curve_r) {
      out.curve.push_back(g(r));
      out.min_g = std::min(out.min_g, out.curve.back());
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

namespace {

std::vector<double> curve_grid_for(const BenchConfig& config, const BenchCell& cell) {
  std::vector<double> r(config.curve_points);
  const double step = config.range / static_cast<double>(config.curve_points - 1);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = cell.r_min + step * static_cast<double>(i);
  if (r[0] <= 0) r[0] = 1e-3 * step;
  return r;
}

double root_mean(const std::vector<double>& v, bool trim) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0, mx = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    sum += x;
    mx = std::max(mx, x);
  }
  if (trim && v.size() >= 2) return std::sqrt((sum - mx) / static_cast<double>(v.size() - 1));
  return std::sqrt(sum / static_cast<double>(v.size()));
}

PointPattern load_replicate(const BenchCell& cell, std::size_t rep) {
  return read_pattern_csv(*cell.load_dir / (std::to_string(rep) + ".csv"), cell.window);
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n_cells = config.cells.size();
  const std::size_t n_est = config.estimators.size();
  const std::size_t reps = config.replicates;

  std::vector<std::vector<double>> grids;
  std::vector<std::vector<double>> truth_curves;
  std::vector<IseIntegrator> integrators;
  for (const auto& cell : config.cells) {
    const auto log_truth = [&](double r) { return std::log(true_pcf(cell.model, r)); };
    integrators.emplace_back(log_truth, cell.r_min, config.range);
    grids.push_back(curve_grid_for(config, cell));
    std::vector<double> truth;
    for (double r : grids.back()) truth.push_back(true_pcf(cell.model, r));
    truth_curves.push_back(std::move(truth));
  }

  // results[(cell * reps + rep) * n_est + est]
  std::vector<ReplicateResult> results(n_cells * reps * n_est);
  std::vector<double> seconds(n_cells * reps * n_est, 0.0);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t job = next++; job < n_cells * reps; job = next++) {
      const std::size_t c = job / reps, rep = job % reps;
      const BenchCell& cell = config.cells[c];
      std::optional<PointPattern> pattern;
      std::string load_error;
      try {
        pattern = cell.load_dir ? load_replicate(cell, rep)
                                : simulate(cell.model, cell.window,
                                           {config.seed, replicate_stream(c, rep)});
      } catch (const std::exception& e) {
        load_error = e.what();
      }
      for (std::size_t k = 0; k < n_est; ++k) {
        const std::size_t slot = job * n_est + k;
        if (!pattern) {
          results[slot].error = load_error;
          continue;
        }
        const auto s0 = std::chrono::steady_clock::now();
        results[slot] = run_replicate(config, cell, config.estimators[k], *pattern,
                                      integrators[c], grids[c]);
        seconds[slot] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
      }
    }
  };
  std::size_t n_threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  n_threads = std::clamp<std::size_t>(n_threads, 1, n_cells * reps);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  BenchReport report;
  report.seed = config.seed;
  report.replicates = reps;
  for (std::size_t c = 0; c < n_cells; ++c) {
    const BenchCell& cell = config.cells[c];
    for (std::size_t k = 0; k < n_est; ++k) {
      EstimatorSummary row;
      row.cell = cell.label();
      row.model = cell.model;
      row.window = cell.window;
      row.r_min = cell.r_min;
      row.estimator = config.estimators[k];
      row.replicates = reps;
      row.curve_r = grids[c];
      row.true_curve = truth_curves[c];
      row.mean_curve.assign(grids[c].size(), 0.0);
      row.min_g = std::numeric_limits<double>::infinity();
      std::vector<double> ise_b, ise_u;
      double sel = 0;
      std::size_t n_sel = 0, n_curve = 0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const std::size_t slot = (c * reps + rep) * n_est + k;
        const ReplicateResult& r = results[slot];
        row.wall_seconds += seconds[slot];
        if (!r.ok) {
          ++row.failures;
          ++row.na;
          if (row.errors.size() < 5 &&
              std::find(row.errors.begin(), row.errors.end(), r.error) == row.errors.end())
            row.errors.push_back(r.error);
          continue;
        }
        sel += r.selection;
        ++n_sel;
        row.min_g = std::min(row.min_g, r.min_g);
        if (!(r.min_g > 0) && row.estimator == Estimator::vse) ++row.positivity_violations;
        bool finite = true;
        for (double v : r.curve) finite = finite && std::isfinite(v);
        if (finite) {
          for (std::size_t i = 0; i < r.curve.size(); ++i) row.mean_curve[i] += r.curve[i];
          ++n_curve;
        }
        if (r.ise_basis && r.ise_uniform) {
          ise_b.push_back(*r.ise_basis);
          ise_u.push_back(*r.ise_uniform);
        } else {
          ++row.na;
        }
      }
      for (double& v : row.mean_curve)
        v = n_curve ? v / static_cast<double>(n_curve) : std::numeric_limits<double>::quiet_NaN();
      row.mean_selection = n_sel ? sel / static_cast<double>(n_sel)
                                 : std::numeric_limits<double>::quiet_NaN();
      if (!n_sel) row.min_g = std::numeric_limits<double>::quiet_NaN();
      row.root_mise = root_mean(ise_b, false);
      row.root_mise_trimmed = root_mean(ise_b, true);
      row.root_mise_uniform = root_mean(ise_u, false);
      row.root_mise_uniform_trimmed = root_mean(ise_u, true);
      const auto differs = [&](double full, double trimmed) {
        return std::isfinite(full) && trimmed > 0 &&
               std::abs(full - trimmed) / trimmed > config.outlier_ratio;
      };
      row.outlier = differs(row.root_mise, row.root_mise_trimmed) ||
                    differs(row.root_mise_uniform, row.root_mise_uniform_trimmed);
      report.rows.push_back(std::move(row));
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// --------------------------------------------------------------- output

void write_report_csv(std::ostream& out, const BenchReport& report) {
  out << "cell,model,window,r_min,estimator,replicates,na,root_mise,root_mise_trimmed,"
         "root_mise_uniform,root_mise_uniform_trimmed,outlier,mean_selection,min_g,"
         "positivity_violations\n";
  for (const auto& r : report.rows) {
    out << r.cell << ',' << to_string(r.model.kind) << ",\"" << format_window(r.window)
        << "\"," << format_double(r.r_min) << ',' << to_string(r.estimator) << ','
        << r.replicates << ',' << r.na << ',' << format_double(r.root_mise) << ','
        << format_double(r.root_mise_trimmed) << ',' << format_double(r.root_mise_uniform)
        << ',' << format_double(r.root_mise_uniform_trimmed) << ',' << (r.outlier ? 1 : 0)
        << ',' << format_double(r.mean_selection) << ',' << format_double(r.min_g) << ','
        << r.positivity_violations << '\n';
  }
}

void write_report_json(std::ostream& out, const BenchReport& report) {
  using nlohmann::json;
  const auto num = [](double x) -> json {
    return std::isfinite(x) ? json(x) : json(format_double(x));
  };
  json j;
  j["seed"] = report.seed;
  j["replicates"] = report.replicates;
  j["wall_seconds"] = report.wall_seconds;
  j["rows"] = json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"cell", r.cell},
                         {"model", to_string(r.model.kind)},
                         {"model_parameters",
                          {{"rho", r.model.rho},
                           {"kappa", r.model.kappa},
                           {"mu", r.model.mu},
                           {"omega", r.model.omega},
                           {"nu", r.model.nu},
                           {"alpha", r.model.alpha}}},
                         {"window", format_window(r.window)},
                         {"r_min", r.r_min},
                         {"estimator", to_string(r.estimator)},
                         {"replicates", r.replicates},
                         {"failures", r.failures},
                         {"na", r.na},
                         {"root_mise", num(r.root_mise)},
                         {"root_mise_trimmed", num(r.root_mise_trimmed)},
                         {"root_mise_uniform", num(r.root_mise_uniform)},
                         {"root_mise_uniform_trimmed", num(r.root_mise_uniform_trimmed)},
                         {"outlier", r.outlier},
                         {"mean_selection", num(r.mean_selection)},
                         {"min_g", num(r.min_g)},
                         {"positivity_violations", r.positivity_violations},
                         {"errors", r.errors},
                         {"wall_seconds", r.wall_seconds}});
  }
  out << j.dump(2) << '\n';
}

void write_mean_curves(const std::filesystem::path& dir, const BenchReport& report) {
  std::filesystem::create_directories(dir);
  for (const auto& r : report.rows) {
    write_columns_csv(dir / (r.cell + "_" + to_string(r.estimator) + ".csv"),
                      {"r", "g_est", "g_true"}, {r.curve_r, r.mean_curve, r.true_curve});
  }
}

}  // namespace vsepcf
