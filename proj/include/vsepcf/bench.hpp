#pragma once

/**
 * @file bench.hpp
 * @brief Replicated simulation study: simulate, fit every estimator with its
 *        own tuning, score the log-pcf error, aggregate per cell.
 *
 * Config file (key = value, `#` comments):
 *
 *     replicates = 500
 *     seed = 1
 *     threads = 0                  # 0: hardware concurrency
 *     R = 0.125
 *     r_min = 0
 *     k_max = 25
 *     estimators = vse,ose,kde
 *     intensity = plugin           # plugin | true
 *     weighting = inverse-distance # inverse-distance | plain
 *     kde_divisor = distance       # distance | radius
 *     thomas.omega = 0.0198        # <model>.<parameter> overrides
 *     cell = poisson 0,0,1,1
 *     cell = thomas 0,0,2,2 rmin=0 load=path/to/dir
 *
 * `load=dir` reads replicate i from dir/<i>.csv instead of simulating.
 */

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vsepcf/baselines.hpp"
#include "vsepcf/simulate.hpp"

namespace vsepcf {

enum class IseWeight {
  basis,    ///< ς₂ (r − r_min) dr, the Fourier-Bessel weight
  uniform,  ///< dr
};

/// ∫ (log ĝ − log g0)² w(r) dr over [r_min, r_min + R] by 256-node
/// Gauss-Legendre. nullopt when either log is not finite at some node.
std::optional<double> ise(const std::function<double(double)>& log_estimate,
                          const std::function<double(double)>& log_truth, double r_min,
                          double range, IseWeight weight = IseWeight::basis);

/// ise() with the truth tabulated once.
class IseIntegrator {
public:
  IseIntegrator(const std::function<double(double)>& log_truth, double r_min, double range);

  /// nullopt when the estimate or the truth is not finite at some node.
  std::optional<double> operator()(const std::function<double(double)>& log_estimate,
                                   IseWeight weight = IseWeight::basis) const;

private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> truth_;
  double r_min_;
  bool truth_ok_ = true;
};

enum class Estimator { vse, ose, kde };
std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct BenchCell {
  ModelSpec model;
  Window window{0, 0, 1, 1};
  double r_min = 0;
  std::optional<std::filesystem::path> load_dir;

  std::string label() const;
};

struct BenchConfig {
  std::vector<BenchCell> cells;
  std::size_t replicates = 500;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  double range = 0.125;
  int k_max = BasisSpec::default_k_max;
  std::vector<Estimator> estimators{Estimator::vse, Estimator::ose, Estimator::kde};
  bool true_intensity = false;
  Weighting weighting = Weighting::inverse_distance;
  KdeDivisor kde_divisor = KdeDivisor::distance;
  std::size_t curve_points = 200;
  double outlier_ratio = 0.2;

  /// Throws InvalidArgument for an empty grid, zero replicates or R larger
  /// than a window side.
  void validate() const;
};

BenchConfig parse_bench_config(std::istream& in);
BenchConfig read_bench_config(const std::filesystem::path& path);

/// Outcome of one estimator on one replicate.
struct ReplicateResult {
  bool ok = false;
  std::optional<double> ise_basis;
  std::optional<double> ise_uniform;
  double selection = 0;  ///< K for series estimators, h for the KDE
  double min_g = 0;      ///< over the curve grid
  std::vector<double> curve;
  std::string error;
};

struct EstimatorSummary {
  std::string cell;
  ModelSpec model;
  Window window{0, 0, 1, 1};
  double r_min = 0;
  Estimator estimator = Estimator::vse;
  std::size_t replicates = 0;
  std::size_t failures = 0;  ///< fit threw
  std::size_t na = 0;        ///< failures plus non-finite log estimates
  double root_mise = 0;
  double root_mise_trimmed = 0;
  double root_mise_uniform = 0;
  double root_mise_uniform_trimmed = 0;
  bool outlier = false;  ///< trimmed and untrimmed differ by more than the ratio
  double mean_selection = 0;
  double min_g = 0;
  std::size_t positivity_violations = 0;
  std::vector<double> curve_r;
  std::vector<double> mean_curve;
  std::vector<double> true_curve;
  std::vector<std::string> errors;  ///< first few distinct failure messages
  double wall_seconds = 0;
};

struct BenchReport {
  std::vector<EstimatorSummary> rows;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  double wall_seconds = 0;
};

/// Stream id of replicate `rep` in cell `cell`.
inline std::uint64_t replicate_stream(std::size_t cell, std::size_t rep) {
  return (static_cast<std::uint64_t>(cell) << 32) | static_cast<std::uint64_t>(rep);
}

/// Runs one estimator on one pattern.
ReplicateResult run_replicate(const BenchConfig& config, const BenchCell& cell,
                              Estimator estimator, const PointPattern& pattern,
                              const IseIntegrator& ise_integrator,
                              const std::vector<double>& curve_r);

/// Deterministic for a given config, whatever the thread count.
BenchReport run_benchmark(const BenchConfig& config);

/// CSV without timings, so repeated runs are byte-identical.
void write_report_csv(std::ostream& out, const BenchReport& report);
void write_report_json(std::ostream& out, const BenchReport& report);
/// One `r,g_est,g_true` file per row, named <cell>_<estimator>.csv.
void write_mean_curves(const std::filesystem::path& dir, const BenchReport& report);

}  // namespace vsepcf
