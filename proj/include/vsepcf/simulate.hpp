#pragma once

/**
 * @file simulate.hpp
 * @brief Point-process samplers (Poisson, Neyman-Scott with Gaussian or
 *        variance-gamma dispersal) and theoretical pair correlation functions.
 */

#include <cstdint>
#include <random>
#include <string>

#include "vsepcf/geometry.hpp"

namespace vsepcf {

/// (seed, stream) fully determines a simulated pattern.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

std::mt19937_64 make_engine(RngSeed seed);

/// Isotropic offspring displacement density f on R².
class DispersalKernel {
public:
  enum class Kind { gaussian, variance_gamma };

  /// N(0, ω² I).
  static DispersalKernel gaussian(double omega);
  /// Gamma variance mixture of Gaussians: X = √V Z with
  /// V ~ Gamma(shape ν + 1, scale 2ω²). The density is
  /// f(r) = (r/ω)^ν K_ν(r/ω) / (π 2^{ν+1} ω² Γ(ν+1)), ν > −1.
  static DispersalKernel variance_gamma(double omega, double nu);

  Kind kind() const noexcept { return kind_; }
  double omega() const noexcept { return omega_; }
  double nu() const noexcept { return nu_; }

  Point sample(std::mt19937_64& rng) const;
  /// Fourier transform ∫ f(x) exp(i k·x) dx at |k| = k.
  double characteristic(double k) const;
  /// f at distance r from the origin (r > 0).
  double density(double r) const;
  /// Parent dilation: 6ω for Gaussian, 6ω·4 for variance-gamma (tail mass
  /// beyond the margin below 1e-8 in both cases).
  double margin() const;

private:
  DispersalKernel(Kind kind, double omega, double nu)
      : kind_(kind), omega_(omega), nu_(nu) {}

  Kind kind_;
  double omega_;
  double nu_;
};

struct ModelSpec {
  enum class Kind { poisson, thomas, variance_gamma, dpp_exponential };

  Kind kind = Kind::poisson;
  double rho = 0;    ///< poisson / dpp intensity
  double kappa = 0;  ///< parent intensity
  double mu = 0;     ///< mean offspring per parent
  double omega = 0;  ///< dispersal scale
  double nu = 0;     ///< variance-gamma shape
  double alpha = 0;  ///< dpp kernel range

  static ModelSpec poisson(double rho);
  static ModelSpec thomas(double kappa, double mu, double omega);
  static ModelSpec variance_gamma(double kappa, double mu, double omega, double nu);
  /// Exponential-kernel DPP; pcf only, no sampler.
  static ModelSpec dpp_exponential(double alpha, double rho);

  /// Parameters of the four models of the reference simulation study
  /// (intensity 200 throughout).
  static ModelSpec reference(Kind kind);

  double intensity() const;
  bool can_simulate() const noexcept { return kind != Kind::dpp_exponential; }
  DispersalKernel kernel() const;  ///< cluster models only

  void validate() const;
};

std::string to_string(ModelSpec::Kind kind);
ModelSpec::Kind model_kind_from_string(const std::string& s);

/// N ~ Poisson(ρ|W|) points i.i.d. uniform on W.
PointPattern sim_poisson(const Window& window, double rho, RngSeed seed);

/// Poisson(κ) parents on W dilated by the kernel margin, Poisson(μ) offspring
/// per parent displaced by the kernel, restricted to W.
PointPattern sim_neyman_scott(const Window& window, double kappa, double mu,
                              const DispersalKernel& kernel, RngSeed seed);

/// Dispatches on the model kind. Throws InvalidArgument for DPP models.
PointPattern simulate(const ModelSpec& model, const Window& window, RngSeed seed);

/// Theoretical pcf. Variance-gamma goes through pcf_convolution_oracle.
double true_pcf(const ModelSpec& model, double r);
/// d/dr log g0(r); analytic except for variance-gamma (central difference).
double true_dlog_pcf(const ModelSpec& model, double r);

/// 1 + (f⋆f)(r)/κ with the planar self-convolution obtained from the Hankel
/// transform (1/2π) ∫₀^∞ f̂(k)² J0(kr) k dk, integrated between consecutive
/// zeros of J0(kr) and accelerated by repeated averaging of partial sums.
double pcf_convolution_oracle(const DispersalKernel& kernel, double kappa, double r);

}  // namespace vsepcf
