#pragma once

/**
 * @file baselines.hpp
 * @brief Comparison estimators: the orthogonal series estimator (OSE) of
 *        g0 − 1 and an Epanechnikov kernel estimator (KDE) of g0.
 *
 * Both take their tuning parameter (K or h) from the composite-likelihood
 * cross-validation criterion used for the VSE, with leave-pair-out fits.
 */

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vsepcf/select.hpp"

namespace vsepcf {

/// ĝ(r) = 1 + Σ_k θ_k φ_k(r − r_min). May be negative.
struct OseFit {
  Eigen::VectorXd theta;
  BasisSpec basis;
  IntensityDescriptor intensity;

  int K() const noexcept { return static_cast<int>(theta.size()); }
  /// Throws InvalidArgument outside [r_min, r_min + R].
  double g(double r) const;
};

/// Per-pair OSE contributions for k = 1..k_max.
///   θ̂_k = Σ_{ordered pairs} e φ_k(t − r_min)(t − r_min)/(2π t) − √2 R/α_k
class OseContext {
public:
  OseContext(const PointPattern& pattern, const IntensityModel& intensity,
             const BasisSpec& basis, PairIntegrator::Options integration = {});

  const BasisSpec& basis() const noexcept { return basis_; }
  std::size_t unordered_count() const noexcept { return static_cast<std::size_t>(t_.size()); }
  /// θ̂ for k = 1..k_max.
  const Eigen::VectorXd& theta() const noexcept { return theta_; }

  OseFit fit(int K, IntensityDescriptor intensity = {}) const;
  /// −∞ when a leave-pair-out estimate or the pair integral is not positive.
  double score(int K) const;

private:
  BasisSpec basis_;
  PairIntegrator integrator_;
  std::vector<double> t_;   // unordered pair distances
  Eigen::MatrixXd contrib_; // k_max × unordered, both orientations summed
  Eigen::MatrixXd phi_;     // φ_k(t − r_min), k_max × unordered
  Eigen::VectorXd theta_;
  double log_rho_sum_ = 0;
};

OseFit ose_fit(const PointPattern& pattern, const IntensityModel& intensity,
               const BasisSpec& basis, int K, IntensityDescriptor descriptor = {});

struct OseSelection {
  OseFit fit;
  CvCurve curve;
};

/// Evaluates CV(K) for K = 1..k_max and applies the VSE selection rule.
OseSelection ose_fit_auto(const OseContext& context, IntensityDescriptor intensity = {},
                          int k_max = BasisSpec::default_k_max);

/// k(u) = 3/4 (1 − u²) on [−1, 1]; k_h(u) = k(u/h)/h.
double epanechnikov(double u, double h);

/// Normalization of each kernel term.
enum class KdeDivisor {
  distance,  ///< k_h(r − t)/(2π t)
  radius,    ///< k_h(r − t)/(2π r)
};

std::string to_string(KdeDivisor d);
KdeDivisor kde_divisor_from_string(const std::string& s);

/// ĝ(r) = Σ_{unordered pairs} E_p k_h(r − t_p)/(2π t_p)  (or /(2π r)),
/// E_p = e(u,v) + e(v,u).
struct KdeFit {
  double bandwidth = 0;
  KdeDivisor divisor = KdeDivisor::distance;
  double r_min = 0;
  double range = 0;
  std::vector<double> t;  ///< sorted pair distances
  std::vector<double> e;  ///< matching summed edge weights
  IntensityDescriptor intensity;

  /// Throws InvalidArgument outside [r_min, r_min + R], or at r = 0 with the
  /// radius divisor.
  double g(double r) const;
};

struct KdeOptions {
  std::size_t grid_size = 20;
  double grid_lo = 0.1;  ///< as a multiple of the pilot bandwidth
  double grid_hi = 2.0;
  std::size_t radial_nodes = 1024;
  KdeDivisor divisor = KdeDivisor::distance;
};

/// 2.34 σ̂ N^{−1/5} from the N unordered pair distances in [r_min, r_min + R].
double kde_pilot_bandwidth(const PairList& pairs, double r_min, double range);

KdeFit kde_fit(const PointPattern& pattern, const IntensityModel& intensity, double r_min,
               double range, double bandwidth, KdeDivisor divisor = KdeDivisor::distance,
               IntensityDescriptor descriptor = {});

struct KdeSelection {
  KdeFit fit;
  std::vector<double> bandwidths;
  std::vector<double> cv;  ///< −∞ where some leave-pair-out estimate vanished
};

/// Maximizes CV(h) over a log-spaced grid around the pilot bandwidth.
KdeSelection kde_fit_auto(const PointPattern& pattern, const IntensityModel& intensity,
                          double r_min, double range, const KdeOptions& options = {},
                          IntensityDescriptor descriptor = {});

}  // namespace vsepcf
