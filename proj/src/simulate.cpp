#include "vsepcf/simulate.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "vsepcf/error.hpp"

namespace vsepcf {

std::mt19937_64 make_engine(RngSeed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.seed),
                    static_cast<std::uint32_t>(seed.seed >> 32),
                    static_cast<std::uint32_t>(seed.stream),
                    static_cast<std::uint32_t>(seed.stream >> 32)};
  return std::mt19937_64(seq);
}

// ------------------------------------------------------- DispersalKernel

DispersalKernel DispersalKernel::gaussian(double omega) {
  if (!(omega > 0) || !std::isfinite(omega))
    throw InvalidArgument("gaussian kernel: omega must be positive");
  return {Kind::gaussian, omega, 0.0};
}

DispersalKernel DispersalKernel::variance_gamma(double omega, double nu) {
  if (!(omega > 0) || !std::isfinite(omega))
    throw InvalidArgument("variance-gamma kernel: omega must be positive");
  if (!(nu > -1) || !std::isfinite(nu))
    throw InvalidArgument("variance-gamma kernel: nu must exceed -1");
  return {Kind::variance_gamma, omega, nu};
}

Point DispersalKernel::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> z(0.0, 1.0);
  double scale = omega_;
  if (kind_ == Kind::variance_gamma) {
    std::gamma_distribution<double> v(nu_ + 1.0, 2.0 * omega_ * omega_);
    scale = std::sqrt(v(rng));
  }
  const double x = z(rng);
  const double y = z(rng);
  return {scale * x, scale * y};
}

double DispersalKernel::characteristic(double k) const {
  const double wk2 = omega_ * omega_ * k * k;
  if (kind_ == Kind::gaussian) return std::exp(-0.5 * wk2);
  return std::pow(1.0 + wk2, -(nu_ + 1.0));
}

double DispersalKernel::density(double r) const {
  if (kind_ == Kind::gaussian)
    return std::exp(-r * r / (2 * omega_ * omega_)) / (2 * std::numbers::pi * omega_ * omega_);
  const double x = r / omega_;
  return std::pow(x, nu_) * std::cyl_bessel_k(std::fabs(nu_), x) /
         (std::numbers::pi * std::pow(2.0, nu_ + 1) * omega_ * omega_ * std::tgamma(nu_ + 1));
}

double DispersalKernel::margin() const {
  return kind_ == Kind::gaussian ? 6 * omega_ : 6 * omega_ * 4.0;
}

// ------------------------------------------------------------- ModelSpec

ModelSpec ModelSpec::poisson(double rho) {
  ModelSpec m;
  m.kind = Kind::poisson;
  m.rho = rho;
  m.validate();
  return m;
}

ModelSpec ModelSpec::thomas(double kappa, double mu, double omega) {
  ModelSpec m;
  m.kind = Kind::thomas;
  m.kappa = kappa;
  m.mu = mu;
  m.omega = omega;
  m.validate();
  return m;
}

ModelSpec ModelSpec::variance_gamma(double kappa, double mu, double omega, double nu) {
  ModelSpec m;
  m.kind = Kind::variance_gamma;
  m.kappa = kappa;
  m.mu = mu;
  m.omega = omega;
  m.nu = nu;
  m.validate();
  return m;
}

ModelSpec ModelSpec::dpp_exponential(double alpha, double rho) {
  ModelSpec m;
  m.kind = Kind::dpp_exponential;
  m.alpha = alpha;
  m.rho = rho;
  m.validate();
  return m;
}

ModelSpec ModelSpec::reference(Kind kind) {
  switch (kind) {
    case Kind::poisson: return poisson(200);
    case Kind::thomas: return thomas(25, 8, 0.0198);
    case Kind::variance_gamma: return variance_gamma(25, 8, 0.01845, -0.25);
    case Kind::dpp_exponential: return dpp_exponential(0.039, 200);
  }
  throw InvalidArgument("unknown model kind");
}

double ModelSpec::intensity() const {
  switch (kind) {
    case Kind::poisson:
    case Kind::dpp_exponential: return rho;
    case Kind::thomas:
    case Kind::variance_gamma: return kappa * mu;
  }
  return 0;
}

DispersalKernel ModelSpec::kernel() const {
  switch (kind) {
    case Kind::thomas: return DispersalKernel::gaussian(omega);
    case Kind::variance_gamma: return DispersalKernel::variance_gamma(omega, nu);
    default: throw InvalidArgument("model has no dispersal kernel");
  }
}

void ModelSpec::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v))
      throw InvalidArgument(std::string("model parameter ") + name + " must be positive");
  };
  switch (kind) {
    case Kind::poisson: positive(rho, "rho"); break;
    case Kind::thomas:
      positive(kappa, "kappa");
      positive(mu, "mu");
      positive(omega, "omega");
      break;
    case Kind::variance_gamma:
      positive(kappa, "kappa");
      positive(mu, "mu");
      positive(omega, "omega");
      if (!(nu > -1)) throw InvalidArgument("model parameter nu must exceed -1");
      break;
    case Kind::dpp_exponential:
      positive(alpha, "alpha");
      positive(rho, "rho");
      break;
  }
}

std::string to_string(ModelSpec::Kind kind) {
  switch (kind) {
    case ModelSpec::Kind::poisson: return "poisson";
    case ModelSpec::Kind::thomas: return "thomas";
    case ModelSpec::Kind::variance_gamma: return "variance-gamma";
    case ModelSpec::Kind::dpp_exponential: return "dpp-exponential";
  }
  return "?";
}

ModelSpec::Kind model_kind_from_string(const std::string& s) {
  if (s == "poisson") return ModelSpec::Kind::poisson;
  if (s == "thomas") return ModelSpec::Kind::thomas;
  if (s == "variance-gamma" || s == "vargamma") return ModelSpec::Kind::variance_gamma;
  if (s == "dpp-exponential" || s == "dpp") return ModelSpec::Kind::dpp_exponential;
  throw InvalidArgument("unknown model '" + s + "'");
}

// -------------------------------------------------------------- samplers

PointPattern sim_poisson(const Window& window, double rho, RngSeed seed) {
  if (!(rho > 0)) throw InvalidArgument("sim_poisson: rho must be positive");
  auto rng = make_engine(seed);
  std::poisson_distribution<long> count(rho * window.area());
  const long n = count(rng);
  std::uniform_real_distribution<double> ux(window.x0(), window.x1());
  std::uniform_real_distribution<double> uy(window.y0(), window.y1());
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    pts.push_back({x, y});
  }
  return PointPattern(window, std::move(pts));
}

PointPattern sim_neyman_scott(const Window& window, double kappa, double mu,
                              const DispersalKernel& kernel, RngSeed seed) {
  if (!(kappa > 0) || !(mu > 0))
    throw InvalidArgument("sim_neyman_scott: kappa and mu must be positive");
  auto rng = make_engine(seed);
  const double m = kernel.margin();
  const Window dilated(window.x0() - m, window.y0() - m, window.x1() + m, window.y1() + m);
  std::poisson_distribution<long> parents(kappa * dilated.area());
  std::poisson_distribution<long> offspring(mu);
  std::uniform_real_distribution<double> ux(dilated.x0(), dilated.x1());
  std::uniform_real_distribution<double> uy(dilated.y0(), dilated.y1());
  std::vector<Point> pts;
  const long np = parents(rng);
  for (long c = 0; c < np; ++c) {
    const double px = ux(rng);
    const double py = uy(rng);
    const long no = offspring(rng);
    for (long k = 0; k < no; ++k) {
      const Point d = kernel.sample(rng);
      const Point p{px + d.x, py + d.y};
      if (window.contains(p)) pts.push_back(p);
    }
  }
  return PointPattern(window, std::move(pts));
}

PointPattern simulate(const ModelSpec& model, const Window& window, RngSeed seed) {
  model.validate();
  switch (model.kind) {
    case ModelSpec::Kind::poisson: return sim_poisson(window, model.rho, seed);
    case ModelSpec::Kind::thomas:
    case ModelSpec::Kind::variance_gamma:
      return sim_neyman_scott(window, model.kappa, model.mu, model.kernel(), seed);
    case ModelSpec::Kind::dpp_exponential:
      throw InvalidArgument("no sampler for determinantal point processes");
  }
  throw InvalidArgument("unknown model kind");
}

// ------------------------------------------------------------ true pcfs

double pcf_convolution_oracle(const DispersalKernel& kernel, double kappa, double r) {
  if (!(kappa > 0)) throw InvalidArgument("convolution oracle: kappa must be positive");
  if (r < 0) throw InvalidArgument("convolution oracle: r must be >= 0");
  const auto spectrum = [&](double k) {
    const double c = kernel.characteristic(k);
    return c * c * k;
  };
  double conv = 0;
  if (r == 0) {
    boost::math::quadrature::exp_sinh<double> integrator;
    conv = integrator.integrate(spectrum, 1e-14);
  } else {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const auto integrand = [&](double k) { return spectrum(k) * std::cyl_bessel_j(0.0, k * r); };
    // Panels between consecutive zeros of J0(kr); within each, subdivide on
    // the kernel scale so the first (possibly very long) panel is resolved.
    const double scale = 1.0 / kernel.omega();
    std::vector<double> partial;
    double sum = 0, lo = 0;
    constexpr int panels = 400;
    for (int m = 1; m <= panels; ++m) {
      const double hi = boost::math::cyl_bessel_j_zero(0.0, m) / r;
      double a = lo;
      while (a < hi) {
        const double b = std::min(hi, a + 4 * scale * (1 + a / scale));
        sum += GK::integrate(integrand, a, b, 4, 1e-11);
        a = b;
      }
      lo = hi;
      partial.push_back(sum);
      if (kernel.kind() == DispersalKernel::Kind::gaussian && lo * kernel.omega() > 40) break;
    }
    if (kernel.kind() == DispersalKernel::Kind::gaussian) {
      conv = sum;
    } else {
      // Algebraic decay: repeated averaging of the trailing partial sums.
      std::vector<double> s(partial.end() - 60, partial.end());
      while (s.size() > 1) {
        for (std::size_t i = 0; i + 1 < s.size(); ++i) s[i] = 0.5 * (s[i] + s[i + 1]);
        s.pop_back();
      }
      conv = s.front();
    }
  }
  conv /= 2 * std::numbers::pi;
  if (!std::isfinite(conv)) throw NumericalError("convolution oracle did not converge");
  return 1.0 + conv / kappa;
}

double true_pcf(const ModelSpec& model, double r) {
  if (r < 0) throw InvalidArgument("true_pcf: r must be >= 0");
  switch (model.kind) {
    case ModelSpec::Kind::poisson: return 1.0;
    case ModelSpec::Kind::thomas: {
      const double w2 = model.omega * model.omega;
      return 1.0 + std::exp(-r * r / (4 * w2)) / (4 * std::numbers::pi * model.kappa * w2);
    }
    case ModelSpec::Kind::variance_gamma:
      return pcf_convolution_oracle(model.kernel(), model.kappa, r);
    case ModelSpec::Kind::dpp_exponential:
      return 1.0 - std::exp(-2 * r / model.alpha);
  }
  return 1.0;
}

double true_dlog_pcf(const ModelSpec& model, double r) {
  switch (model.kind) {
    case ModelSpec::Kind::poisson: return 0.0;
    case ModelSpec::Kind::thomas: {
      const double w2 = model.omega * model.omega;
      const double c = std::exp(-r * r / (4 * w2)) / (4 * std::numbers::pi * model.kappa * w2);
      return c * (-r / (2 * w2)) / (1.0 + c);
    }
    case ModelSpec::Kind::dpp_exponential: {
      const double e = std::exp(-2 * r / model.alpha);
      return (2 / model.alpha) * e / (1 - e);
    }
    case ModelSpec::Kind::variance_gamma: {
      const double h = 1e-4 * model.omega;
      const double lo = std::max(0.0, r - h);
      return (std::log(true_pcf(model, r + h)) - std::log(true_pcf(model, lo))) / (r + h - lo);
    }
  }
  return 0.0;
}

}  // namespace vsepcf
