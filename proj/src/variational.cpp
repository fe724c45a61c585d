#include "vsepcf/variational.hpp"

#include <cmath>
#include <numbers>

#include "vsepcf/error.hpp"
#include "vsepcf/quadrature.hpp"

namespace vsepcf {

// ------------------------------------------------------------------- ψ

PsiSpec::PsiSpec(double b) : b_(b) {
  if (!(b > 0) || !std::isfinite(b)) throw InvalidArgument("psi: support b must be positive");
}

PsiValue PsiSpec::eval(double t) const {
  if (t < 0) throw InvalidArgument("psi: t must be >= 0");
  if (t > b_) return {};
  const double u = t / b_;
  const double inv_b2 = 1.0 / (b_ * b_);
  const double one_minus = 1.0 - u;
  PsiValue v;
  v.value = u * u * one_minus * one_minus;
  v.d1_over_t = 2.0 * inv_b2 * one_minus * (1.0 - 2.0 * u);
  v.d1 = t * v.d1_over_t;
  v.over_t = t * inv_b2 * one_minus * one_minus;
  return v;
}

std::string to_string(Weighting w) {
  return w == Weighting::inverse_distance ? "inverse-distance" : "plain";
}

Weighting weighting_from_string(const std::string& s) {
  if (s == "inverse-distance") return Weighting::inverse_distance;
  if (s == "plain") return Weighting::plain;
  throw InvalidArgument("unknown weighting '" + s + "' (inverse-distance|plain)");
}

// ---------------------------------------------------- VariationalSystem

VariationalSystem VariationalSystem::assemble(const PairList& pairs,
                                              const BasisSpec& basis,
                                              const PsiSpec& psi, int K,
                                              Weighting weighting) {
  if (K < 1 || K > basis.k_max())
    throw InvalidArgument("assemble_system: K must lie in 1..k_max");
  VariationalSystem sys(basis, psi, weighting);
  const std::size_t n = pairs.size();
  sys.distances_.resize(n);
  sys.weights_.resize(static_cast<Eigen::Index>(n));
  sys.slope_coef_.resize(static_cast<Eigen::Index>(n));
  sys.curv_coef_.resize(static_cast<Eigen::Index>(n));
  sys.derivs_.resize(K, static_cast<Eigen::Index>(n));
  sys.b_incr_.resize(K, static_cast<Eigen::Index>(n));

  std::vector<double> d1(K), d2(K);
  for (std::size_t p = 0; p < n; ++p) {
    const Pair& pr = pairs[p];
    const double s = pr.t - basis.r_min();
    if (!(s >= 0) || s > basis.range())
      throw InvalidArgument("assemble_system: pair distance outside [r_min, r_min + R]");
    const PsiValue pv = psi.eval(pr.t);
    const auto col = static_cast<Eigen::Index>(p);
    sys.distances_[p] = pr.t;
    if (weighting == Weighting::inverse_distance) {
      sys.weights_[col] = pr.e * pv.over_t;
      sys.slope_coef_[col] = pr.e * pv.d1_over_t;
      sys.curv_coef_[col] = pr.e * pv.over_t;
    } else {
      // (d − 1) ψ/t + ψ' with d = 2
      sys.weights_[col] = pr.e * pv.value;
      sys.slope_coef_[col] = pr.e * (pv.over_t + pv.d1);
      sys.curv_coef_[col] = pr.e * pv.value;
    }
    basis.eval_all(s, K, nullptr, d1.data(), d2.data());
    for (int k = 0; k < K; ++k) {
      sys.derivs_(k, col) = d1[k];
      sys.b_incr_(k, col) = sys.slope_coef_[col] * d1[k] + sys.curv_coef_[col] * d2[k];
    }
  }
  sys.finalize();
  return sys;
}

void VariationalSystem::finalize() {
  const Eigen::MatrixXd weighted = derivs_ * weights_.asDiagonal();
  A_ = weighted * derivs_.transpose();
  A_ = 0.5 * (A_ + A_.transpose()).eval();
  b_ = b_incr_.rowwise().sum();
}

VariationalSystem VariationalSystem::extended() const {
  const int K = dimension();
  if (K + 1 > basis_.k_max())
    throw InvalidArgument("extend: K already at k_max");
  VariationalSystem out(basis_, psi_, weighting_);
  out.distances_ = distances_;
  out.weights_ = weights_;
  out.slope_coef_ = slope_coef_;
  out.curv_coef_ = curv_coef_;
  const auto n = static_cast<Eigen::Index>(distances_.size());
  out.derivs_.resize(K + 1, n);
  out.b_incr_.resize(K + 1, n);
  out.derivs_.topRows(K) = derivs_;
  out.b_incr_.topRows(K) = b_incr_;
  for (Eigen::Index p = 0; p < n; ++p) {
    const BasisValue v = basis_.eval(K + 1, distances_[p] - basis_.r_min());
    out.derivs_(K, p) = v.d1;
    out.b_incr_(K, p) = slope_coef_[p] * v.d1 + curv_coef_[p] * v.d2;
  }
  // Existing block is reused as is; only the new row/column is summed.
  out.A_.resize(K + 1, K + 1);
  out.A_.topLeftCorner(K, K) = A_;
  const Eigen::VectorXd weighted_new =
      (out.derivs_.row(K).transpose().array() * weights_.array()).matrix();
  const Eigen::VectorXd cross = derivs_ * weighted_new;
  out.A_.block(0, K, K, 1) = cross;
  out.A_.block(K, 0, 1, K) = cross.transpose();
  out.A_(K, K) = out.derivs_.row(K).dot(weighted_new);
  out.b_.resize(K + 1);
  out.b_.head(K) = b_;
  out.b_[K] = out.b_incr_.row(K).sum();
  return out;
}

VariationalSystem VariationalSystem::truncated(int K) const {
  if (K < 1 || K > dimension()) throw InvalidArgument("truncate: K out of range");
  VariationalSystem out(basis_, psi_, weighting_);
  out.distances_ = distances_;
  out.weights_ = weights_;
  out.slope_coef_ = slope_coef_;
  out.curv_coef_ = curv_coef_;
  out.derivs_ = derivs_.topRows(K);
  out.b_incr_ = b_incr_.topRows(K);
  out.A_ = A_.topLeftCorner(K, K);
  out.b_ = b_.head(K);
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> VariationalSystem::reassembled() const {
  const int K = dimension();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
  for (Eigen::Index p = 0; p < derivs_.cols(); ++p) {
    A.noalias() += weights_[p] * derivs_.col(p) * derivs_.col(p).transpose();
    b += b_incr_.col(p);
  }
  return {A, b};
}

// ---------------------------------------------------------------- solve

SystemSolution solve_system(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  const double cond = lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(lmax > 0) || !(cond <= max_condition))
    throw SingularSystem("variational system is singular (condition " +
                             std::to_string(cond) + "); reduce K",
                         cond);
  const Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw SingularSystem("Cholesky factorization of A failed", cond);
  SystemSolution sol;
  sol.beta = -llt.solve(b);
  sol.inverse = llt.solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
  sol.condition = cond;
  return sol;
}

VseCoefficients solve_beta(const VariationalSystem& system, IntensityDescriptor intensity) {
  SystemSolution sol = solve_system(system.A(), system.b());
  return VseCoefficients{std::move(sol.beta), system.basis(), system.psi(),
                         system.weighting(), std::move(intensity)};
}

double eval_log_g(const BasisSpec& basis, std::span<const double> beta, double r) {
  const double s = r - basis.r_min();
  if (!(s >= 0) || s > basis.range())
    throw InvalidArgument("log g evaluation outside [r_min, r_min + R]");
  const int K = static_cast<int>(beta.size());
  std::vector<double> phi(K);
  basis.eval_all(s, K, phi.data(), nullptr, nullptr);
  double sum = 0;
  for (int k = 0; k < K; ++k) sum += beta[k] * phi[k];
  return sum;
}

double VseCoefficients::log_g(double r) const {
  return eval_log_g(basis, std::span<const double>(beta.data(), beta.size()), r);
}

// ---------------------------------------------------------- sensitivity

Eigen::MatrixXd sensitivity(const BasisSpec& basis, const PsiSpec& psi, int K,
                            Weighting weighting,
                            const std::function<double(double)>& g0,
                            std::size_t nodes) {
  if (K < 1 || K > basis.k_max()) throw InvalidArgument("sensitivity: K out of range");
  const double hi = std::min(basis.r_max(), psi.support());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(K, K);
  if (!(hi > basis.r_min())) return S;
  const auto rule = gauss_legendre_on(basis.r_min(), hi, nodes);
  Eigen::VectorXd d1(K);
  for (std::size_t q = 0; q < nodes; ++q) {
    const double t = rule.nodes[q];
    basis.eval_all(t - basis.r_min(), K, nullptr, d1.data(), nullptr);
    double w = rule.weights[q] * psi.eval(t).value * g0(t);
    if (weighting == Weighting::plain) w *= t;
    S.noalias() += w * d1 * d1.transpose();
  }
  return 2.0 * std::numbers::pi * S;
}

// ------------------------------------------------- identity Monte Carlo

namespace {

struct Accumulator {
  std::vector<double> lhs, rhs;

  IdentityCheck summarize() const {
    IdentityCheck out;
    const std::size_t n = lhs.size();
    out.replicates = n;
    if (n == 0) return out;
    const auto mean_se = [n](const std::vector<double>& v) {
      double m = 0;
      for (double x : v) m += x;
      m /= static_cast<double>(n);
      double ss = 0;
      for (double x : v) ss += (x - m) * (x - m);
      const double se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
      return std::make_pair(m, se);
    };
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = lhs[i] - rhs[i];
    std::tie(out.lhs_mean, out.lhs_se) = mean_se(lhs);
    std::tie(out.rhs_mean, out.rhs_se) = mean_se(rhs);
    std::tie(out.diff_mean, out.diff_se) = mean_se(diff);
    return out;
  }
};

}  // namespace

IdentityCheck variational_residual(std::span<const PointPattern> replicates,
                                   const RadialTestFunction& test,
                                   const std::function<double(double)>& dlog_g0,
                                   const IntensityModel& intensity,
                                   Weighting weighting) {
  if (!(test.hi > test.lo) || test.lo < 0)
    throw InvalidArgument("variational_residual: invalid test-function support");
  Accumulator acc;
  for (const PointPattern& x : replicates) {
    const PairList pairs = close_pairs(x, test.lo, test.hi, intensity);
    double lhs = 0, rhs = 0;
    for (const Pair& p : pairs.pairs()) {
      const double h = test.h(p.t);
      const double dh = test.dh(p.t);
      if (weighting == Weighting::inverse_distance) {
        lhs += p.e / p.t * h * dlog_g0(p.t);
        rhs -= p.e / p.t * dh;
      } else {
        lhs += p.e * h * dlog_g0(p.t);
        rhs -= p.e * (h / p.t + dh);
      }
    }
    acc.lhs.push_back(lhs);
    acc.rhs.push_back(rhs);
  }
  return acc.summarize();
}

IdentityCheck planar_variational_residual(
    std::span<const PointPattern> replicates, const PlanarTestFunction& test,
    const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& grad_log_g,
    const IntensityModel& intensity) {
  if (!(test.reach > 0)) throw InvalidArgument("planar test function needs a positive reach");
  Accumulator acc;
  for (const PointPattern& x : replicates) {
    const PairList pairs = close_pairs(x, 0.0, test.reach, intensity);
    double lhs = 0, rhs = 0;
    for (const Pair& p : pairs.pairs()) {
      const Eigen::Vector2d w(p.dx, p.dy);
      lhs += p.e * grad_log_g(w).dot(test.h(w));
      rhs -= p.e * test.div(w);
    }
    acc.lhs.push_back(lhs);
    acc.rhs.push_back(rhs);
  }
  return acc.summarize();
}

}  // namespace vsepcf
