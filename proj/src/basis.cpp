#include "vsepcf/basis.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vsepcf/error.hpp"

namespace vsepcf {

namespace {

constexpr double series_limit = 12.0;
constexpr double asymptotic_limit = 40.0;

// Power series in extended precision; the largest term stays below ~5e3 for
// x < 12 so cancellation costs at most four digits of the 64-bit mantissa.
BesselPair series(double xd) {
  const long double x = xd;
  const long double q = -x * x / 4;
  long double term0 = 1, term1 = 1;  // term1 carries the 1/(k!(k+1)!) factor
  long double s0 = 1, s1 = 1;
  for (int k = 1; k < 60; ++k) {
    term0 *= q / (static_cast<long double>(k) * k);
    term1 *= q / (static_cast<long double>(k) * (k + 1));
    s0 += term0;
    s1 += term1;
    if (std::fabs(term0) < 1e-22L * std::fabs(s0) &&
        std::fabs(term1) < 1e-22L * std::fabs(s1))
      break;
  }
  return {static_cast<double>(s0), static_cast<double>(x / 2 * s1)};
}

// Miller's backward recurrence J_{k-1} = (2k/x) J_k − J_{k+1}, normalised by
// J0 + 2 Σ J_{2k} = 1.
BesselPair miller(double xd) {
  const long double x = xd;
  int start = static_cast<int>(xd + 20 + 2 * std::sqrt(40 * xd));
  start += start % 2;
  long double jp1 = 0, j = 1e-30L, norm = 0, j1 = 0;
  for (int k = start; k > 0; --k) {
    const long double jm1 = (2.0L * k / x) * j - jp1;
    jp1 = j;
    j = jm1;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2 * j;
    if (k - 1 == 1) j1 = j;
  }
  norm += j;
  return {static_cast<double>(j / norm), static_cast<double>(j1 / norm)};
}

// Hankel asymptotic expansion, truncated at the smallest term.
BesselPair asymptotic(double x) {
  const auto pq = [x](double mu) {  // mu = 4ν²
    double p = 1, q = 0, term = 1, prev = 1e300;
    for (int k = 1; k < 100; ++k) {
      const double a = (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
      term *= a;
      if (std::fabs(term) >= prev) break;
      prev = std::fabs(term);
      // Odd k feed Q, even k feed P, with alternating signs in pairs.
      switch (k % 4) {
        case 1: q += term; break;
        case 2: p -= term; break;
        case 3: q -= term; break;
        case 0: p += term; break;
      }
      if (prev < 1e-18) break;
    }
    return std::make_pair(p, q);
  };
  const double c = std::cos(x), s = std::sin(x);
  const double amp = std::sqrt(2.0 / (std::numbers::pi * x));
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  // χ0 = x − π/4 and χ1 = x − 3π/4 via angle addition.
  const double cos0 = (c + s) * inv_sqrt2, sin0 = (s - c) * inv_sqrt2;
  const double cos1 = (s - c) * inv_sqrt2, sin1 = -(s + c) * inv_sqrt2;
  const auto [p0, q0] = pq(0.0);
  const auto [p1, q1] = pq(4.0);
  return {amp * (p0 * cos0 - q0 * sin0), amp * (p1 * cos1 - q1 * sin1)};
}

}  // namespace

BesselPair bessel_j01(double x) {
  if (std::isnan(x)) return {x, x};
  if (x < 0) {
    // J0 even, J1 odd.
    const auto r = bessel_j01(-x);
    return {r.j0, -r.j1};
  }
  if (x < series_limit) return series(x);
  if (x < asymptotic_limit) return miller(x);
  return asymptotic(x);
}

double bessel_j0(double x) { return bessel_j01(x).j0; }
double bessel_j1(double x) { return bessel_j01(x).j1; }

double bessel_j1_over_x(double x) {
  if (std::fabs(x) < series_limit) {
    // (1/2) Σ (−x²/4)^k / (k!(k+1)!)
    const long double q = -static_cast<long double>(x) * x / 4;
    long double term = 1, sum = 1;
    for (int k = 1; k < 60; ++k) {
      term *= q / (static_cast<long double>(k) * (k + 1));
      sum += term;
      if (std::fabs(term) < 1e-22L * std::fabs(sum)) break;
    }
    return static_cast<double>(sum / 2);
  }
  return bessel_j1(x) / x;
}

double bessel_j(int order, double x) {
  switch (order) {
    case 0: return bessel_j0(x);
    case 1: return bessel_j1(x);
    default: throw InvalidArgument("bessel_j: only orders 0 and 1 are available");
  }
}

double bessel_zero(int nu, int k) {
  if (nu != 0) throw InvalidArgument("bessel_zero: only order 0 is available");
  if (k < 1) throw InvalidArgument("bessel_zero: index must be >= 1");
  // McMahon: α ≈ β + 1/(8β) − 31/(384β³), β = (k − 1/4)π.
  const double beta = (k - 0.25) * std::numbers::pi;
  double x = beta + 1.0 / (8 * beta) - 31.0 / (384 * beta * beta * beta);
  for (int iter = 0; iter < 50; ++iter) {
    const auto [j0, j1] = bessel_j01(x);
    const double step = j0 / j1;  // Newton with J0' = −J1
    x += step;
    if (std::fabs(step) <= 4 * std::numeric_limits<double>::epsilon() * x) {
      return x;
    }
  }
  throw NumericalError("bessel_zero: Newton iteration did not converge for k=" +
                       std::to_string(k));
}

// ------------------------------------------------------------- BasisSpec

BasisSpec::BasisSpec(double range, double r_min, int k_max)
    : range_(range), r_min_(r_min), k_max_(k_max) {
  if (!(range > 0) || !std::isfinite(range))
    throw InvalidArgument("basis: range R must be positive");
  if (!(r_min >= 0) || !std::isfinite(r_min))
    throw InvalidArgument("basis: r_min must be >= 0");
  if (k_max < 1) throw InvalidArgument("basis: k_max must be >= 1");
  roots_.reserve(k_max);
  norm_.reserve(k_max);
  for (int k = 1; k <= k_max; ++k) {
    const double a = bessel_zero(0, k);
    roots_.push_back(a);
    norm_.push_back(std::numbers::sqrt2 / (range_ * bessel_j1(a)));
  }
}

void BasisSpec::check_index(int k) const {
  if (k < 1 || k > k_max_)
    throw InvalidArgument("basis index " + std::to_string(k) + " outside 1.." +
                          std::to_string(k_max_));
}

double BasisSpec::root(int k) const {
  check_index(k);
  return roots_[k - 1];
}

BasisValue BasisSpec::eval(int k, double s) const {
  check_index(k);
  if (!(s >= 0) || s > range_)
    throw InvalidArgument("basis argument outside [0, R]");
  const double a = roots_[k - 1] / range_;
  const double x = a * s;
  const double c = norm_[k - 1];
  const auto [j0, j1] = bessel_j01(x);
  // J0'' = −J0 + J1/x
  return {c * j0, -c * a * j1, c * a * a * (-j0 + bessel_j1_over_x(x))};
}

void BasisSpec::eval_all(double s, int K, double* value, double* d1, double* d2) const {
  if (K < 0 || K > k_max_) check_index(K);
  for (int k = 0; k < K; ++k) {
    const double a = roots_[k] / range_;
    const double x = a * s;
    const double c = norm_[k];
    const auto [j0, j1] = bessel_j01(x);
    if (value) value[k] = c * j0;
    if (d1) d1[k] = -c * a * j1;
    if (d2) {
      const double j1x = x < series_limit ? bessel_j1_over_x(x) : j1 / x;
      d2[k] = c * a * a * (-j0 + j1x);
    }
  }
}

double BasisSpec::constant_projection(int k) const {
  check_index(k);
  return std::numbers::sqrt2 * range_ / roots_[k - 1];
}

}  // namespace vsepcf
