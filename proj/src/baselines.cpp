#include "vsepcf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "vsepcf/error.hpp"

namespace vsepcf {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
constexpr double two_pi = 2 * std::numbers::pi;

void check_range(double r, double lo, double hi, const char* what) {
  const double tol = 1e-12 * std::max(1.0, hi);
  if (!(r >= lo - tol && r <= hi + tol))
    throw InvalidArgument(std::string(what) + ": r outside [r_min, r_min + R]");
}

}  // namespace

// ------------------------------------------------------------------ OSE

double OseFit::g(double r) const {
  check_range(r, basis.r_min(), basis.r_max(), "OseFit::g");
  const double s = std::clamp(r - basis.r_min(), 0.0, basis.range());
  std::vector<double> phi(static_cast<std::size_t>(K()));
  basis.eval_all(s, K(), phi.data(), nullptr, nullptr);
  double sum = 1.0;
  for (int k = 0; k < K(); ++k) sum += theta[k] * phi[k];
  return sum;
}

OseContext::OseContext(const PointPattern& pattern, const IntensityModel& intensity,
                       const BasisSpec& basis, PairIntegrator::Options integration)
    : basis_(basis),
      integrator_(pattern.window(), intensity, basis.r_min(), basis.range(), integration) {
  const PairList pairs = close_pairs(pattern, basis.r_min(), basis.r_max(), intensity);
  const auto& un = pairs.unordered();
  const int kmax = basis.k_max();
  const auto n = static_cast<Eigen::Index>(un.size());
  t_.resize(un.size());
  contrib_.resize(kmax, n);
  phi_.resize(kmax, n);
  std::vector<double> phi(kmax);
  for (std::size_t m = 0; m < un.size(); ++m) {
    const Pair& p = pairs[un[m]];
    const double e = p.e + pairs[pairs.partner(un[m])].e;
    const double s = p.t - basis.r_min();
    t_[m] = p.t;
    log_rho_sum_ += std::log(intensity.at(pattern, p.i)) + std::log(intensity.at(pattern, p.j));
    basis.eval_all(s, kmax, phi.data(), nullptr, nullptr);
    const double scale = e * s / (two_pi * p.t);
    for (int k = 0; k < kmax; ++k) {
      phi_(k, static_cast<Eigen::Index>(m)) = phi[k];
      contrib_(k, static_cast<Eigen::Index>(m)) = scale * phi[k];
    }
  }
  theta_ = contrib_.rowwise().sum();
  for (int k = 0; k < kmax; ++k) theta_[k] -= basis.constant_projection(k + 1);
}

OseFit OseContext::fit(int K, IntensityDescriptor intensity) const {
  if (K < 1 || K > basis_.k_max()) throw InvalidArgument("ose: K must lie in 1..k_max");
  return {theta_.head(K), basis_, std::move(intensity)};
}

double OseContext::score(int K) const {
  if (K < 1 || K > basis_.k_max()) throw InvalidArgument("ose: K must lie in 1..k_max");
  if (t_.empty()) throw InvalidArgument("ose: no pairs in [r_min, r_min + R]");
  const Eigen::VectorXd theta = theta_.head(K);
  double leave_out = 0;
  for (Eigen::Index m = 0; m < phi_.cols(); ++m) {
    const auto phi = phi_.col(m).head(K);
    const double g = 1.0 + phi.dot(theta - contrib_.col(m).head(K));
    if (!(g > 0)) return neg_inf;
    leave_out += std::log(g);
  }
  const OseFit full{theta, basis_, {}};
  const double integral = integrator_.integrate([&](double t) { return full.g(t); });
  if (!(integral > 0) || !std::isfinite(integral)) return neg_inf;
  return log_rho_sum_ + leave_out - static_cast<double>(t_.size()) * std::log(integral);
}

OseFit ose_fit(const PointPattern& pattern, const IntensityModel& intensity,
               const BasisSpec& basis, int K, IntensityDescriptor descriptor) {
  const BasisSpec trimmed(basis.range(), basis.r_min(), K);
  const OseContext context(pattern, intensity, trimmed);
  OseFit out = context.fit(K, std::move(descriptor));
  out.basis = basis;
  return out;
}

OseSelection ose_fit_auto(const OseContext& context, IntensityDescriptor intensity,
                          int k_max) {
  if (k_max < 2 || k_max > context.basis().k_max())
    throw InvalidArgument("ose: k_max must lie in 2..basis k_max");
  CvCurve curve;
  for (int K = 1; K <= k_max; ++K) {
    curve.K.push_back(K);
    curve.cv.push_back(context.score(K));
  }
  const auto hit = apply_selection_rule(curve.cv, k_max);
  if (!hit) throw NumericalError("ose: no feasible truncation K");
  curve.selected = hit->first;
  curve.rule = hit->second;
  return {context.fit(curve.selected, std::move(intensity)), std::move(curve)};
}

// ------------------------------------------------------------------ KDE

std::string to_string(KdeDivisor d) {
  return d == KdeDivisor::distance ? "distance" : "radius";
}

KdeDivisor kde_divisor_from_string(const std::string& s) {
  if (s == "distance") return KdeDivisor::distance;
  if (s == "radius") return KdeDivisor::radius;
  throw InvalidArgument("unknown KDE divisor '" + s + "' (expected distance or radius)");
}

double epanechnikov(double u, double h) {
  const double x = u / h;
  return std::abs(x) < 1 ? 0.75 * (1 - x * x) / h : 0.0;
}

namespace {

// ĝ(r) over sorted t, skipping index `skip`.
double kernel_estimate(const std::vector<double>& t, const std::vector<double>& e, double h,
                       KdeDivisor divisor, double r,
                       std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  auto lo = std::lower_bound(t.begin(), t.end(), r - h);
  auto hi = std::upper_bound(lo, t.end(), r + h);
  double sum = 0;
  for (auto it = lo; it != hi; ++it) {
    const auto q = static_cast<std::size_t>(it - t.begin());
    if (q == skip) continue;
    const double k = e[q] * epanechnikov(r - *it, h);
    sum += divisor == KdeDivisor::distance ? k / *it : k;
  }
  return divisor == KdeDivisor::distance ? sum / two_pi : sum / (two_pi * r);
}

struct SortedPairs {
  std::vector<double> t;
  std::vector<double> e;
  std::vector<double> log_rho;  // log ρ(u) + log ρ(v)
};

SortedPairs sorted_pairs(const PointPattern& pattern, const IntensityModel& intensity,
                         const PairList& pairs) {
  const auto& un = pairs.unordered();
  std::vector<std::size_t> order(un.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[un[a]].t < pairs[un[b]].t;
  });
  SortedPairs out;
  out.t.reserve(un.size());
  out.e.reserve(un.size());
  out.log_rho.reserve(un.size());
  for (std::size_t m : order) {
    const Pair& p = pairs[un[m]];
    out.t.push_back(p.t);
    out.e.push_back(p.e + pairs[pairs.partner(un[m])].e);
    out.log_rho.push_back(std::log(intensity.at(pattern, p.i)) +
                          std::log(intensity.at(pattern, p.j)));
  }
  return out;
}

}  // namespace

double KdeFit::g(double r) const {
  check_range(r, r_min, r_min + range, "KdeFit::g");
  if (divisor == KdeDivisor::radius && !(r > 0))
    throw InvalidArgument("KdeFit::g: r must be positive");
  return kernel_estimate(t, e, bandwidth, divisor, r);
}

double kde_pilot_bandwidth(const PairList& pairs, double r_min, double range) {
  double n = 0, mean = 0, m2 = 0;
  for (std::size_t k : pairs.unordered()) {
    const double t = pairs[k].t;
    if (t < r_min || t > r_min + range) continue;
    n += 1;
    const double d = t - mean;
    mean += d / n;
    m2 += d * (t - mean);
  }
  if (n < 2) throw InvalidArgument("kde: fewer than two pairs in [r_min, r_min + R]");
  const double sd = std::sqrt(m2 / (n - 1));
  if (!(sd > 0)) throw InvalidArgument("kde: pair distances have zero spread");
  return 2.34 * sd * std::pow(n, -0.2);
}

KdeFit kde_fit(const PointPattern& pattern, const IntensityModel& intensity, double r_min,
               double range, double bandwidth, KdeDivisor divisor,
               IntensityDescriptor descriptor) {
  if (!(bandwidth > 0)) throw InvalidArgument("kde: bandwidth must be positive");
  const double hi = std::min(r_min + range + bandwidth, pattern.window().min_side());
  const PairList pairs =
      close_pairs(pattern, std::max(0.0, r_min - bandwidth), hi, intensity);
  if (pairs.empty()) throw InvalidArgument("kde: no pairs near [r_min, r_min + R]");
  SortedPairs sp = sorted_pairs(pattern, intensity, pairs);
  return {bandwidth, divisor, r_min, range, std::move(sp.t), std::move(sp.e),
          std::move(descriptor)};
}

KdeSelection kde_fit_auto(const PointPattern& pattern, const IntensityModel& intensity,
                          double r_min, double range, const KdeOptions& options,
                          IntensityDescriptor descriptor) {
  if (options.grid_size < 1 || !(options.grid_lo > 0) || !(options.grid_hi >= options.grid_lo))
    throw InvalidArgument("kde: invalid bandwidth grid");
  const double h0 = kde_pilot_bandwidth(close_pairs(pattern, r_min, r_min + range, intensity),
                                        r_min, range);
  const double h_max = options.grid_hi * h0;
  const double hi = std::min(r_min + range + h_max, pattern.window().min_side());
  const PairList pairs = close_pairs(pattern, std::max(0.0, r_min - h_max), hi, intensity);
  const SortedPairs sp = sorted_pairs(pattern, intensity, pairs);

  PairIntegrator::Options iopt;
  iopt.radial_nodes = options.radial_nodes;
  const PairIntegrator integrator(pattern.window(), intensity, r_min, range, iopt);

  std::vector<std::size_t> in_range;
  for (std::size_t q = 0; q < sp.t.size(); ++q)
    if (sp.t[q] >= r_min && sp.t[q] <= r_min + range) in_range.push_back(q);
  double log_rho_sum = 0;
  for (std::size_t q : in_range) log_rho_sum += sp.log_rho[q];

  KdeSelection out;
  const std::size_t n = options.grid_size;
  for (std::size_t g = 0; g < n; ++g) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(g) / static_cast<double>(n - 1);
    const double h = h0 * options.grid_lo * std::pow(options.grid_hi / options.grid_lo, frac);
    out.bandwidths.push_back(h);
    double cv = 0;
    for (std::size_t q : in_range) {
      const double ghat = kernel_estimate(sp.t, sp.e, h, options.divisor, sp.t[q], q);
      if (!(ghat > 0)) {
        cv = neg_inf;
        break;
      }
      cv += std::log(ghat);
    }
    if (std::isfinite(cv)) {
      const double integral = integrator.integrate(
          [&](double r) { return kernel_estimate(sp.t, sp.e, h, options.divisor, r); });
      cv = integral > 0 && std::isfinite(integral)
               ? log_rho_sum + cv - static_cast<double>(in_range.size()) * std::log(integral)
               : neg_inf;
    }
    out.cv.push_back(cv);
  }
  const auto best = std::max_element(out.cv.begin(), out.cv.end());
  if (!std::isfinite(*best)) throw NumericalError("kde: no bandwidth with a finite CV");
  const double h = out.bandwidths[static_cast<std::size_t>(best - out.cv.begin())];

  KdeFit fit{h, options.divisor, r_min, range, {}, {}, std::move(descriptor)};
  for (std::size_t q = 0; q < sp.t.size(); ++q) {
    if (sp.t[q] >= r_min - h && sp.t[q] <= r_min + range + h) {
      fit.t.push_back(sp.t[q]);
      fit.e.push_back(sp.e[q]);
    }
  }
  out.fit = std::move(fit);
  return out;
}

}  // namespace vsepcf
