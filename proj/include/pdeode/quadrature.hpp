#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "pdeode/errors.hpp"

namespace pdeode {

/// Nodes and weights of a quadrature rule on some interval.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }

  template <class F>
  [[nodiscard]] double integrate(F&& f) const {
    double sum = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) sum += weights[k] * f(nodes[k]);
    return sum;
  }
};

/// Gauss-Legendre rule of the given order on [-1, 1] (Newton on the
/// three-term recurrence; nodes accurate to machine precision).
[[nodiscard]] inline QuadratureRule gauss_legendre(int order) {
  if (order < 1) throw DomainError("gauss_legendre: order must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = (order == 1) ? 1.0 : order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

/// Composite Gauss-Legendre rule over consecutive panels [b_k, b_{k+1}].
[[nodiscard]] inline QuadratureRule composite_gauss_legendre(std::span<const double> breakpoints,
                                                             int order) {
  if (breakpoints.size() < 2) throw DomainError("composite_gauss_legendre: need >= 2 breakpoints");
  const QuadratureRule ref = gauss_legendre(order);
  QuadratureRule rule;
  rule.nodes.reserve((breakpoints.size() - 1) * ref.size());
  rule.weights.reserve(rule.nodes.capacity());
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double a = breakpoints[k];
    const double b = breakpoints[k + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      rule.nodes.push_back(mid + half * ref.nodes[j]);
      rule.weights.push_back(half * ref.weights[j]);
    }
  }
  return rule;
}

/// Composite Gauss-Legendre rule with equal panels on [a, b].
[[nodiscard]] inline QuadratureRule composite_gauss_legendre(double a, double b, std::size_t panels,
                                                             int order) {
  if (panels == 0) throw DomainError("composite_gauss_legendre: panels must be >= 1");
  std::vector<double> breaks(panels + 1);
  for (std::size_t k = 0; k <= panels; ++k) breaks[k] = a + (b - a) * static_cast<double>(k) / panels;
  breaks.back() = b;
  return composite_gauss_legendre(breaks, order);
}

}  // namespace pdeode
