#pragma once

/**
 * @file select.hpp
 * @brief Composite-likelihood cross-validation over the truncation K, with
 *        leave-pair-out fits obtained by rank-1 downdates of A⁻¹.
 *
 *   CV(K) = Σ_{pairs} log[ρ(u)ρ(v) ĝ_K^{−{u,v}}(‖v−u‖)]
 *           − N_pairs · log ∫∫_{W²} 1[r_min <= ‖v−u‖ <= r_min+R] ρ(u)ρ(v) ĝ_K(‖v−u‖) du dv
 *
 * Sums run over unordered pairs in range (each once), N_pairs is their count
 * and ĝ^{−{u,v}} is the fit without both orientations of the pair.
 */

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vsepcf/variational.hpp"

namespace vsepcf {

/// ∫∫_{W²} 1[r_min <= ‖v−u‖ <= r_min+R] ρ(u)ρ(v) g(‖v−u‖) du dv for any g,
/// reduced to ∫ Γ(t) g(t) dt with Γ precomputed at Gauss-Legendre nodes.
///
/// Constant ρ: Γ(t) = ρ² 2π t γ̄(t). Raster ρ: Γ(t) = t ∫ C_ρ(t e_θ) dθ with
/// C_ρ(w) = ∫ ρ(u)ρ(u+w) du evaluated on the raster (each cell sampled at
/// `subdivision`² midpoints, `angular_nodes` equispaced directions).
class PairIntegrator {
public:
  struct Options {
    std::size_t radial_nodes = 256;
    std::size_t angular_nodes = 32;
    std::size_t subdivision = 2;
  };

  PairIntegrator(const Window& window, const IntensityModel& intensity, double r_min,
                 double range);
  PairIntegrator(const Window& window, const IntensityModel& intensity, double r_min,
                 double range, Options options);

  double integrate(const std::function<double(double)>& g) const;

  /// Quadrature nodes in t and the matching weights Γ(t_q) w_q.
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Pair integral of exp(log ĝ) for a fitted VSE.
double pair_integral(const Window& window, const IntensityModel& intensity,
                     const VseCoefficients& coeffs);

/// (A − c u uᵀ)⁻¹ from A⁻¹ by Sherman-Morrison. Throws SingularSystem when
/// 1 − c uᵀA⁻¹u is not safely positive.
Eigen::MatrixXd sherman_morrison_downdate(const Eigen::MatrixXd& inverse,
                                          const Eigen::VectorXd& u, double c);

struct DowndateResult {
  Eigen::VectorXd beta;
  bool fallback = false;  ///< recomputed naively because the update was unsafe
};

/// β̂ without the two ordered records `record` and `partner` (the two
/// orientations of one pair, sharing a rank-1 direction).
DowndateResult downdate_pair(const VariationalSystem& system, const SystemSolution& full,
                             std::size_t record, std::size_t partner);

/// A′ and b′ with both records removed, summed from scratch.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> downdated_system(
    const VariationalSystem& system, std::size_t record, std::size_t partner);

enum class SelectionRule {
  first_local_max,   ///< smallest K >= 2 that is a local maximum of CV on K >= 2
  boundary_max,      ///< K = K_max reached with CV(K_max) >= CV(K_max − 1)
  global_max,        ///< no local maximum; argmax over K >= 2
};

std::string to_string(SelectionRule rule);

struct CvCurve {
  std::vector<int> K;
  std::vector<double> cv;  ///< −∞ where the fit at K was singular
  int selected = 0;
  SelectionRule rule = SelectionRule::first_local_max;
  std::size_t fallbacks = 0;  ///< leave-pair-out fits that needed naive recompute

  /// Selection came from a boundary or fallback rule.
  bool flagged() const noexcept { return rule != SelectionRule::first_local_max; }
};

/// Applies the first-local-maximum rule to CV values for K = 1, 2, ...
/// (cv[0] is K = 1). K is a local maximum when CV(K) >= CV(K + 1) and, for
/// K > 2, CV(K) >= CV(K − 1); CV(1) never takes part. `k_max` is the last admissible K; when fewer values
/// than k_max are given the scan stops at the last one without treating it
/// as the boundary. Returns nullopt when no finite CV(K), K >= 2, exists.
std::optional<std::pair<int, SelectionRule>> apply_selection_rule(
    std::span<const double> cv, int k_max);

/// Everything CV needs that does not depend on K.
class CvContext {
public:
  CvContext(const PointPattern& pattern, const IntensityModel& intensity,
            const BasisSpec& basis, const PsiSpec& psi,
            Weighting weighting = Weighting::inverse_distance,
            PairIntegrator::Options integration = {});

  const PairList& pairs() const noexcept { return pairs_; }
  const BasisSpec& basis() const noexcept { return basis_; }
  const PsiSpec& psi() const noexcept { return psi_; }
  Weighting weighting() const noexcept { return weighting_; }
  const PairIntegrator& integrator() const noexcept { return integrator_; }
  std::size_t unordered_count() const noexcept { return pairs_.unordered().size(); }
  /// Σ over unordered pairs of log ρ(u) + log ρ(v).
  double log_intensity_sum() const noexcept { return log_rho_sum_; }
  /// φ_k(t_p − r_min) for unordered pair p (column) and k = 1..k_max (row).
  const Eigen::MatrixXd& basis_values() const noexcept { return phi_; }

  /// CV(K) from the system at K. Counts naive fallbacks into `fallbacks`.
  /// Throws SingularSystem when the full-data fit is singular.
  double score(const VariationalSystem& system, std::size_t* fallbacks = nullptr) const;

private:
  BasisSpec basis_;
  PsiSpec psi_;
  Weighting weighting_;
  PairList pairs_;
  PairIntegrator integrator_;
  double log_rho_sum_ = 0;
  Eigen::MatrixXd phi_;
};

/// CV(K) for one K (convenience wrapper; errors if there are no pairs).
double cv_score(const CvContext& context, int K);

struct SelectOptions {
  int k_max = BasisSpec::default_k_max;
  /// Evaluate every K up to k_max instead of stopping at the first local
  /// maximum.
  bool full_curve = false;
};

/// Scans K = 1, 2, ... with incremental system extension and applies the
/// selection rule. Throws NumericalError when no K is feasible and
/// InvalidArgument when there are no pairs in range.
CvCurve select_k(const CvContext& context, const SelectOptions& options = {});

/// A VSE fit with its truncation chosen by cross-validation.
struct VseFit {
  VseCoefficients coefficients;
  CvCurve curve;
};

VseFit fit_vse_auto(const CvContext& context, IntensityDescriptor intensity = {},
                    const SelectOptions& options = {});

/// A VSE fit at a fixed K.
VseCoefficients fit_vse(const PointPattern& pattern, const IntensityModel& intensity,
                        const BasisSpec& basis, const PsiSpec& psi, int K,
                        Weighting weighting = Weighting::inverse_distance,
                        IntensityDescriptor descriptor = {});

}  // namespace vsepcf
