#include "vsepcf/select.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "vsepcf/error.hpp"
#include "vsepcf/quadrature.hpp"

namespace vsepcf {

namespace {
constexpr double neg_inf = -std::numeric_limits<double>::infinity();
}

// ------------------------------------------------------- PairIntegrator

PairIntegrator::PairIntegrator(const Window& window, const IntensityModel& intensity,
                               double r_min, double range)
    : PairIntegrator(window, intensity, r_min, range, Options{}) {}

PairIntegrator::PairIntegrator(const Window& window, const IntensityModel& intensity,
                               double r_min, double range, Options options) {
  if (!(r_min >= 0) || !(range > 0)) throw InvalidArgument("pair integral: invalid range");
  const auto rule = gauss_legendre_on(r_min, r_min + range, options.radial_nodes);
  nodes_ = rule.nodes;
  weights_.resize(nodes_.size());
  if (intensity.is_constant()) {
    const double rho2 = intensity.rho() * intensity.rho();
    for (std::size_t q = 0; q < nodes_.size(); ++q) {
      const double t = nodes_[q];
      weights_[q] = rule.weights[q] * rho2 * 2 * std::numbers::pi * t *
                    window.iso_set_covariance(t);
    }
    return;
  }
  if (!intensity.raster())
    throw InvalidArgument("pair integral: per-point intensity requires an intensity raster");
  const IntensityRaster& raster = *intensity.raster();
  if (!(raster.window() == window))
    throw InvalidArgument("pair integral: raster window differs from the pattern window");

  // Sample points u with their ρ(u) and area weights.
  const std::size_t sub = std::max<std::size_t>(1, options.subdivision);
  const double cw = raster.cell_width() / sub, ch = raster.cell_height() / sub;
  std::vector<Point> us;
  std::vector<double> rho_u;
  for (std::size_t iy = 0; iy < raster.ny() * sub; ++iy) {
    for (std::size_t ix = 0; ix < raster.nx() * sub; ++ix) {
      const Point u{window.x0() + (ix + 0.5) * cw, window.y0() + (iy + 0.5) * ch};
      const double r = raster.at(u);
      if (r > 0) {
        us.push_back(u);
        rho_u.push_back(r);
      }
    }
  }
  const double du = cw * ch;
  const std::size_t na = std::max<std::size_t>(4, options.angular_nodes);
  for (std::size_t q = 0; q < nodes_.size(); ++q) {
    const double t = nodes_[q];
    double angular = 0;
    for (std::size_t a = 0; a < na; ++a) {
      const double theta = 2 * std::numbers::pi * (a + 0.5) / na;
      const double wx = t * std::cos(theta), wy = t * std::sin(theta);
      double c = 0;
      for (std::size_t m = 0; m < us.size(); ++m)
        c += rho_u[m] * raster.at({us[m].x + wx, us[m].y + wy});
      angular += c * du;
    }
    weights_[q] = rule.weights[q] * t * angular * (2 * std::numbers::pi / na);
  }
}

double PairIntegrator::integrate(const std::function<double(double)>& g) const {
  double sum = 0;
  for (std::size_t q = 0; q < nodes_.size(); ++q) sum += weights_[q] * g(nodes_[q]);
  return sum;
}

double pair_integral(const Window& window, const IntensityModel& intensity,
                     const VseCoefficients& coeffs) {
  const PairIntegrator integrator(window, intensity, coeffs.basis.r_min(),
                                  coeffs.basis.range());
  return integrator.integrate([&](double t) { return coeffs.g(t); });
}

// ------------------------------------------------------------ downdates

Eigen::MatrixXd sherman_morrison_downdate(const Eigen::MatrixXd& inverse,
                                          const Eigen::VectorXd& u, double c) {
  const Eigen::VectorXd z = inverse * u;
  const double den = 1.0 - c * u.dot(z);
  if (!(den > 1e-10))
    throw SingularSystem("rank-1 downdate makes the system singular",
                         std::numeric_limits<double>::infinity());
  return inverse + (c / den) * z * z.transpose();
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> downdated_system(
    const VariationalSystem& system, std::size_t record, std::size_t partner) {
  const int K = system.dimension();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(K);
  const auto& D = system.derivatives();
  const auto& w = system.weights();
  for (Eigen::Index p = 0; p < D.cols(); ++p) {
    if (static_cast<std::size_t>(p) == record || static_cast<std::size_t>(p) == partner)
      continue;
    A.noalias() += w[p] * D.col(p) * D.col(p).transpose();
    b += system.b_increments().col(p);
  }
  return {A, b};
}

DowndateResult downdate_pair(const VariationalSystem& system, const SystemSolution& full,
                             std::size_t record, std::size_t partner) {
  const auto k = static_cast<Eigen::Index>(record);
  const auto q = static_cast<Eigen::Index>(partner);
  // Both orientations share the distance, hence the direction r'(t).
  const Eigen::VectorXd u = system.derivatives().col(k);
  const double c = system.weights()[k] + system.weights()[q];
  const Eigen::VectorXd delta = system.b_increments().col(k) + system.b_increments().col(q);

  const Eigen::VectorXd z = full.inverse * u;
  const double den = 1.0 - c * u.dot(z);
  DowndateResult out;
  if (den > 1e-10) {
    // A'⁻¹ = A⁻¹ + c z zᵀ / den,  β' = −A'⁻¹ (b − δ)
    const Eigen::VectorXd b_new = system.b() - delta;
    const Eigen::VectorXd y = -full.beta - full.inverse * delta;  // A⁻¹ b'
    out.beta = -(y + (c * z.dot(b_new) / den) * z);
    return out;
  }
  auto [A, b] = downdated_system(system, record, partner);
  out.beta = solve_system(A, b).beta;
  out.fallback = true;
  return out;
}

// ------------------------------------------------------- selection rule

std::string to_string(SelectionRule rule) {
  switch (rule) {
    case SelectionRule::first_local_max: return "first-local-max";
    case SelectionRule::boundary_max: return "boundary-max";
    case SelectionRule::global_max: return "global-max";
  }
  return "?";
}

std::optional<std::pair<int, SelectionRule>> apply_selection_rule(
    std::span<const double> cv, int k_max) {
  const int n = static_cast<int>(cv.size());
  const auto at = [&](int K) { return cv[K - 1]; };
  // The admissible domain starts at K = 2, so K = 2 has no left neighbour.
  const auto left_ok = [&](int K) { return K == 2 || at(K) >= at(K - 1); };
  for (int K = 2; K < n; ++K) {
    if (std::isfinite(at(K)) && left_ok(K) && at(K) >= at(K + 1))
      return std::make_pair(K, SelectionRule::first_local_max);
  }
  if (n < k_max) return std::nullopt;
  if (n >= 2 && std::isfinite(at(n)) && left_ok(n))
    return std::make_pair(n, SelectionRule::boundary_max);
  int best = 0;
  for (int K = 2; K <= n; ++K) {
    if (std::isfinite(at(K)) && (best == 0 || at(K) > at(best))) best = K;
  }
  if (best == 0) return std::nullopt;
  return std::make_pair(best, SelectionRule::global_max);
}

// ------------------------------------------------------------ CvContext

CvContext::CvContext(const PointPattern& pattern, const IntensityModel& intensity,
                     const BasisSpec& basis, const PsiSpec& psi, Weighting weighting,
                     PairIntegrator::Options integration)
    : basis_(basis),
      psi_(psi),
      weighting_(weighting),
      pairs_(close_pairs(pattern, basis.r_min(), basis.r_max(), intensity)),
      integrator_(pattern.window(), intensity, basis.r_min(), basis.range(), integration) {
  const auto& un = pairs_.unordered();
  phi_.resize(basis.k_max(), static_cast<Eigen::Index>(un.size()));
  std::vector<double> phi(basis.k_max());
  for (std::size_t m = 0; m < un.size(); ++m) {
    const Pair& p = pairs_[un[m]];
    log_rho_sum_ += std::log(intensity.at(pattern, p.i)) + std::log(intensity.at(pattern, p.j));
    basis.eval_all(p.t - basis.r_min(), basis.k_max(), phi.data(), nullptr, nullptr);
    for (int k = 0; k < basis.k_max(); ++k) phi_(k, static_cast<Eigen::Index>(m)) = phi[k];
  }
}

double CvContext::score(const VariationalSystem& system, std::size_t* fallbacks) const {
  const int K = system.dimension();
  const SystemSolution full = solve_system(system.A(), system.b());
  const auto& un = pairs_.unordered();
  double leave_out = 0;
  for (std::size_t m = 0; m < un.size(); ++m) {
    const DowndateResult d = downdate_pair(system, full, un[m], pairs_.partner(un[m]));
    if (d.fallback && fallbacks) ++*fallbacks;
    leave_out += d.beta.dot(phi_.col(static_cast<Eigen::Index>(m)).head(K));
  }
  const std::span<const double> beta(full.beta.data(), static_cast<std::size_t>(K));
  const double integral = integrator_.integrate(
      [&](double t) { return std::exp(eval_log_g(basis_, beta, t)); });
  if (!(integral > 0) || !std::isfinite(integral) || !std::isfinite(leave_out))
    return neg_inf;
  return log_rho_sum_ + leave_out - static_cast<double>(un.size()) * std::log(integral);
}

double cv_score(const CvContext& context, int K) {
  if (context.unordered_count() == 0)
    throw InvalidArgument("cv_score: no pairs in [r_min, r_min + R]");
  const auto system = VariationalSystem::assemble(context.pairs(), context.basis(),
                                                  context.psi(), K, context.weighting());
  return context.score(system);
}

CvCurve select_k(const CvContext& context, const SelectOptions& options) {
  if (options.k_max < 2 || options.k_max > context.basis().k_max())
    throw InvalidArgument("select_k: k_max must lie in 2..basis k_max");
  if (context.unordered_count() == 0)
    throw InvalidArgument("select_k: no pairs in [r_min, r_min + R]");
  CvCurve curve;
  auto system = VariationalSystem::assemble(context.pairs(), context.basis(), context.psi(),
                                            1, context.weighting());
  for (int K = 1; K <= options.k_max; ++K) {
    if (K > 1) system = system.extended();
    double cv = neg_inf;
    try {
      cv = context.score(system, &curve.fallbacks);
    } catch (const SingularSystem&) {
    }
    curve.K.push_back(K);
    curve.cv.push_back(cv);
    if (!options.full_curve && K >= 3) {
      if (auto hit = apply_selection_rule(curve.cv, options.k_max);
          hit && hit->second == SelectionRule::first_local_max)
        break;
    }
  }
  const auto hit = apply_selection_rule(curve.cv, options.k_max);
  if (!hit) throw NumericalError("select_k: no feasible truncation K");
  curve.selected = hit->first;
  curve.rule = hit->second;
  return curve;
}

VseFit fit_vse_auto(const CvContext& context, IntensityDescriptor intensity,
                    const SelectOptions& options) {
  CvCurve curve = select_k(context, options);
  const auto system = VariationalSystem::assemble(context.pairs(), context.basis(),
                                                  context.psi(), curve.selected,
                                                  context.weighting());
  return {solve_beta(system, std::move(intensity)), std::move(curve)};
}

VseCoefficients fit_vse(const PointPattern& pattern, const IntensityModel& intensity,
                        const BasisSpec& basis, const PsiSpec& psi, int K,
                        Weighting weighting, IntensityDescriptor descriptor) {
  const PairList pairs = close_pairs(pattern, basis.r_min(), basis.r_max(), intensity);
  const auto system = VariationalSystem::assemble(pairs, basis, psi, K, weighting);
  return solve_beta(system, std::move(descriptor));
}

}  // namespace vsepcf
