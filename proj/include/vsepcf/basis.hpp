#pragma once

/**
 * @file basis.hpp
 * @brief Bessel functions J0 and J1, positive roots of J0, and the
 *        orthonormal Fourier-Bessel basis on [0, R] with weight s.
 *
 * Only order ν = 0 is implemented (planar point processes). The basis
 * functions are
 *
 *     φ_k(s) = √2 / (R J1(α_k)) · J0(α_k s / R),   0 <= s <= R,
 *
 * where α_k is the k-th positive root of J0, so that
 * ∫₀^R φ_k(s) φ_l(s) s ds = δ_kl.
 */

#include <vector>

namespace vsepcf {

double bessel_j0(double x);
double bessel_j1(double x);
/// J1(x)/x with the x → 0 limit 1/2.
double bessel_j1_over_x(double x);
/// J_order(x) for order 0 or 1.
double bessel_j(int order, double x);

/// d/dx J0 = −J1.
inline double bessel_j0_prime(double x) { return -bessel_j1(x); }
/// d/dx J1 = J0 − J1/x.
inline double bessel_j1_prime(double x) {
  return bessel_j0(x) - bessel_j1_over_x(x);
}

/// J0(x) and J1(x) from one evaluation.
struct BesselPair {
  double j0;
  double j1;
};
BesselPair bessel_j01(double x);

/// k-th positive root of J_ν, k >= 1. Only ν = 0 is supported.
/// Throws NumericalError if Newton does not converge in 50 steps.
double bessel_zero(int nu, int k);

/// φ_k(s) together with its first two derivatives.
struct BasisValue {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
};

/// Fourier-Bessel family for ν = 0 on [r_min, r_min + R].
class BasisSpec {
public:
  static constexpr int default_k_max = 25;

  BasisSpec(double range, double r_min = 0.0, int k_max = default_k_max);

  int nu() const noexcept { return 0; }
  double range() const noexcept { return range_; }
  double r_min() const noexcept { return r_min_; }
  double r_max() const noexcept { return r_min_ + range_; }
  int k_max() const noexcept { return k_max_; }
  /// Weight exponent d − 1 of w(s) = s^{d−1}.
  int weight_exponent() const noexcept { return 1; }

  /// α_k, 1-based.
  double root(int k) const;
  const std::vector<double>& roots() const noexcept { return roots_; }

  /// φ_k(s) and derivatives for 1 <= k <= k_max, 0 <= s <= R.
  BasisValue eval(int k, double s) const;

  /// φ_1..φ_K at s (and derivatives) into caller buffers of length >= K.
  /// Any output pointer may be null.
  void eval_all(double s, int K, double* value, double* d1, double* d2) const;

  /// ∫₀^R φ_k(s) s ds, the projection of the constant 1: √2 R / α_k.
  double constant_projection(int k) const;

  bool operator==(const BasisSpec& other) const {
    return range_ == other.range_ && r_min_ == other.r_min_ && k_max_ == other.k_max_;
  }

private:
  void check_index(int k) const;

  double range_;
  double r_min_;
  int k_max_;
  std::vector<double> roots_;
  std::vector<double> norm_;  // √2 / (R J1(α_k))
};

}  // namespace vsepcf
