#pragma once

/**
 * @file variational.hpp
 * @brief Closed-form variational estimating equation A β + b = 0 for a
 *        log-linear pair correlation function log g0(t) = β·r(t), with the
 *        Fourier-Bessel basis r_k(t) = φ_k(t − r_min).
 *
 * Two weightings of the pair sums are available:
 *
 *  - Weighting::inverse_distance (default)
 *        A = Σ e/t ψ r' r'ᵀ,   b = Σ e/t (ψ' r' + ψ r'')
 *  - Weighting::plain
 *        A = Σ e ψ r' r'ᵀ,     b = Σ e (ψ r'/t + ψ' r' + ψ r'')
 *
 * where the sums run over ordered pairs of distinct points at distance t and
 * e is the translation edge weight. With ψ(t) = (t/b)²(1 − t/b)² every 1/t
 * factor is absorbed analytically (ψ/t and ψ'/t are polynomials), so nearly
 * coincident points never divide by a small number.
 */

#include <functional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "vsepcf/basis.hpp"
#include "vsepcf/geometry.hpp"

namespace vsepcf {

/// ψ and its derived quantities at one distance.
struct PsiValue {
  double value = 0;      ///< ψ(t)
  double d1 = 0;         ///< ψ'(t)
  double over_t = 0;     ///< ψ(t)/t, 0 at t = 0
  double d1_over_t = 0;  ///< ψ'(t)/t, 2/b² at t = 0
};

/// ψ(t) = (t/b)²(1 − t/b)² on [0, b], zero elsewhere.
class PsiSpec {
public:
  explicit PsiSpec(double b);

  double support() const noexcept { return b_; }
  PsiValue eval(double t) const;

  bool operator==(const PsiSpec&) const = default;

private:
  double b_;
};

enum class Weighting {
  inverse_distance,  ///< pair terms carry e/t^{d-1}
  plain,             ///< pair terms carry e
};

std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);

/// Free-form description of the intensity used to build edge weights; kept
/// with fitted coefficients for serialization.
struct IntensityDescriptor {
  std::string mode = "constant";  ///< constant | plugin | column
  double value = 0;               ///< ρ for constant/plugin modes
};

/// The K×K matrix A, the K-vector b, and the per-pair rank-1 records they are
/// built from. Record p holds weight w_p, basis derivative vector r'(t_p)
/// (column p of derivatives()) and b increment (column p of b_increments()),
/// with A = Σ w_p r'_p r'_pᵀ and b = Σ b-increment_p.
class VariationalSystem {
public:
  static VariationalSystem assemble(const PairList& pairs, const BasisSpec& basis,
                                    const PsiSpec& psi, int K,
                                    Weighting weighting = Weighting::inverse_distance);

  int dimension() const noexcept { return static_cast<int>(b_.size()); }
  const Eigen::MatrixXd& A() const noexcept { return A_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }

  std::size_t record_count() const noexcept { return distances_.size(); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  const Eigen::MatrixXd& derivatives() const noexcept { return derivs_; }
  const Eigen::MatrixXd& b_increments() const noexcept { return b_incr_; }
  double distance(std::size_t p) const { return distances_[p]; }

  const BasisSpec& basis() const noexcept { return basis_; }
  const PsiSpec& psi() const noexcept { return psi_; }
  Weighting weighting() const noexcept { return weighting_; }

  /// The system for K + 1: one new row/column of A and one new entry of b,
  /// computed from the stored pair distances only.
  VariationalSystem extended() const;

  /// Leading K×K block (K <= dimension()).
  VariationalSystem truncated(int K) const;

  /// A and b rebuilt by summing the stored records one by one.
  std::pair<Eigen::MatrixXd, Eigen::VectorXd> reassembled() const;

private:
  VariationalSystem(BasisSpec basis, PsiSpec psi, Weighting weighting)
      : basis_(std::move(basis)), psi_(psi), weighting_(weighting) {}

  void finalize();

  BasisSpec basis_;
  PsiSpec psi_;
  Weighting weighting_;
  std::vector<double> distances_;
  Eigen::VectorXd weights_;     // coefficient of r' r'ᵀ
  Eigen::VectorXd slope_coef_;  // coefficient of r' in the b increment
  Eigen::VectorXd curv_coef_;   // coefficient of r'' in the b increment
  Eigen::MatrixXd derivs_;      // K × N
  Eigen::MatrixXd b_incr_;      // K × N
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
};

/// Condition numbers above this are treated as singular.
inline constexpr double max_condition = 1e12;

/// β̂ = −A⁻¹b together with A⁻¹ (kept for rank-1 downdates).
struct SystemSolution {
  Eigen::VectorXd beta;
  Eigen::MatrixXd inverse;
  double condition = 0;
};

/// Throws SingularSystem when A is not positive definite or its condition
/// number exceeds max_condition.
SystemSolution solve_system(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Fitted log-linear pcf: log ĝ(r) = Σ_k β_k φ_k(r − r_min).
struct VseCoefficients {
  Eigen::VectorXd beta;
  BasisSpec basis;
  PsiSpec psi;
  Weighting weighting = Weighting::inverse_distance;
  IntensityDescriptor intensity;

  int K() const noexcept { return static_cast<int>(beta.size()); }
  /// Throws InvalidArgument outside [r_min, r_min + R].
  double log_g(double r) const;
  double g(double r) const { return std::exp(log_g(r)); }
};

/// Solves A β + b = 0 for the system's basis and ψ.
VseCoefficients solve_beta(const VariationalSystem& system,
                           IntensityDescriptor intensity = {});

/// Σ_k β_k φ_k(r − r_min) for an arbitrary coefficient vector.
double eval_log_g(const BasisSpec& basis, std::span<const double> beta, double r);

/// Expected value of A under an isotropic pcf g0:
///   ς₂ ∫ ψ(t) r'(t) r'(t)ᵀ g0(t) [t] dt over [r_min, r_min + R]
/// with the bracketed factor present for Weighting::plain only. This is the
/// sensitivity matrix of the stacked estimating function with the sign that
/// makes it positive semi-definite.
Eigen::MatrixXd sensitivity(const BasisSpec& basis, const PsiSpec& psi, int K,
                            Weighting weighting,
                            const std::function<double(double)>& g0,
                            std::size_t nodes = 512);

/// Test function h for the isotropic identity, with its derivative. Pairs
/// with distance outside [lo, hi] contribute nothing.
struct RadialTestFunction {
  std::function<double(double)> h;
  std::function<double(double)> dh;
  double lo = 0;
  double hi = 0;
};

/// Monte-Carlo summary of both sides of a variational identity.
struct IdentityCheck {
  double lhs_mean = 0;
  double rhs_mean = 0;
  double lhs_se = 0;
  double rhs_se = 0;
  double diff_mean = 0;  ///< mean of (lhs − rhs) per replicate
  double diff_se = 0;    ///< standard error of the paired difference
  std::size_t replicates = 0;
};

/// Isotropic identity
///   E Σ e/t^{d−1} h (log g0)' = −E Σ e/t^{d−1} h'                 (inverse_distance)
///   E Σ e h (log g0)'         = −E Σ e {(d−1) h/t + h'}           (plain)
/// evaluated on each replicate.
IdentityCheck variational_residual(std::span<const PointPattern> replicates,
                                   const RadialTestFunction& test,
                                   const std::function<double(double)>& dlog_g0,
                                   const IntensityModel& intensity,
                                   Weighting weighting);

/// Vector field h: R² → R² with its divergence, supported on ‖w‖ <= reach.
struct PlanarTestFunction {
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> h;
  std::function<double(const Eigen::Vector2d&)> div;
  double reach = 0;
};

/// Displacement-form identity E Σ e ∇log g(v−u)·h(v−u) = −E Σ e div h(v−u).
IdentityCheck planar_variational_residual(
    std::span<const PointPattern> replicates, const PlanarTestFunction& test,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& grad_log_g,
    const IntensityModel& intensity);

}  // namespace vsepcf
