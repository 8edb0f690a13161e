#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "pdeode/certifier.hpp"
#include "pdeode/config.hpp"
#include "pdeode/scenarios.hpp"

namespace pdeode::test {

inline ScenarioConfig bundled(const std::string& id) { return parse_config_text(std::string(*scenarios::find(id))); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Lowest `count` eigenvalues of -f'' + q f with cos(t) f - sin(t) f' = 0 at
/// 0 and cos(t) f + sin(t) f' = 0 at 1, from a lumped-mass ghost-point finite
/// difference scheme on `cells` cells (Dirichlet ends eliminated).
inline std::vector<double> fd_oracle(double q, double t1, double t2, int cells, int count) {
  const double h = 1.0 / cells;
  const bool dir_l = t1 == 0.0;
  const bool dir_r = t2 == 0.0;
  const int first = dir_l ? 1 : 0;
  const int last = dir_r ? cells - 1 : cells;
  const int m = last - first + 1;
  Eigen::VectorXd d(m);
  Eigen::VectorXd e(m - 1);
  for (int k = 0; k < m; ++k) d[k] = 2.0 / (h * h) + q;
  for (int k = 0; k < m - 1; ++k) e[k] = -1.0 / (h * h);
  if (!dir_l) {
    d[0] = 2.0 * (1.0 + h * std::cos(t1) / std::sin(t1)) / (h * h) + q;
    e[0] *= std::sqrt(2.0);
  }
  if (!dir_r) {
    d[m - 1] = 2.0 * (1.0 + h * std::cos(t2) / std::sin(t2)) / (h * h) + q;
    e[m - 2] *= std::sqrt(2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + count};
}

/// Richardson-extrapolated eigenvalues from grids `cells` and `cells / 2`.
inline std::vector<double> fd_oracle_richardson(double q, double t1, double t2, int cells, int count) {
  const auto fine = fd_oracle(q, t1, t2, cells, count);
  const auto coarse = fd_oracle(q, t1, t2, cells / 2, count);
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
  return out;
}

/// Composite Simpson rule, used as an oracle independent of the library's
/// Gauss-Legendre panels.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0;
}

/// Model with N + n = 1 and the given scalar F, G, H.
inline ReducedModel scalar_model(double f, double g, double h) {
  ReducedModel m;
  m.n_modes = 0;
  m.n_ode = 1;
  m.lambda = Eigen::VectorXd::Constant(1, 100.0);
  m.F = Eigen::MatrixXd::Constant(1, 1, f);
  m.G = Eigen::VectorXd::Constant(1, g);
  m.H = Eigen::MatrixXd::Constant(1, 1, h);
  return m;
}

/// Random model with Hurwitz F, rank-deficient H >= 0 and G scaled so that
/// both feasible and infeasible instances occur.
inline ReducedModel random_model(std::mt19937& rng, int dim) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(dim, dim), l(dim, 2);
  Eigen::VectorXd g(dim);
  for (int i = 0; i < dim; ++i) {
    g[i] = nd(rng);
    for (int j = 0; j < dim; ++j) a(i, j) = nd(rng);
    for (int j = 0; j < 2; ++j) l(i, j) = nd(rng);
  }
  const double shift = max_real_eigenvalue(a) + 0.5 + std::uniform_real_distribution<double>(0, 1)(rng);
  ReducedModel m = scalar_model(0, 0, 0);
  m.n_ode = dim;
  m.F = a - shift * Eigen::MatrixXd::Identity(dim, dim);
  m.G = g * std::uniform_real_distribution<double>(0.2, 2.0)(rng);
  m.H = l * l.transpose() * std::uniform_real_distribution<double>(0.05, 1.0)(rng);
  return m;
}

/// Peak gain over frequency of (alpha H)^{1/2} (jw - F)^{-1} G / sqrt(beta),
/// by a dense logarithmic sweep.
inline double hinf_gain(const ReducedModel& m, double alpha, double beta) {
  const Eigen::Index n = m.dim();
  const Eigen::MatrixXcd f = m.F.cast<std::complex<double>>();
  const Eigen::MatrixXcd q = (alpha * m.H).cast<std::complex<double>>();
  const Eigen::VectorXcd g = m.G.cast<std::complex<double>>();
  double peak = 0.0;
  auto at = [&](double w) {
    const Eigen::MatrixXcd res = std::complex<double>(0, w) * Eigen::MatrixXcd::Identity(n, n) - f;
    const Eigen::VectorXcd v = res.partialPivLu().solve(g);
    return std::sqrt(std::abs(v.dot(q * v)) / beta);
  };
  peak = at(0.0);
  for (int k = 0; k <= 6000; ++k) peak = std::max(peak, at(std::pow(10.0, -4.0 + 8.0 * k / 6000.0)));
  return peak;
}

}  // namespace pdeode::test
