#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace vsepcf {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Returns the n-point rule. Rules are computed once per n and cached;
/// the returned reference stays valid for the lifetime of the program.
const GaussLegendreRule& gauss_legendre(std::size_t n);

/// Nodes and weights of the n-point rule mapped onto [a, b].
struct MappedRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

MappedRule gauss_legendre_on(double a, double b, std::size_t n);

/// Integral of f over [a, b] with the n-point rule.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::size_t n);

}  // namespace vsepcf
