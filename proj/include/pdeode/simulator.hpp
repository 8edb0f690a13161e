#pragma once

// Closed-loop modal simulation of the coupled system truncated at n_sim modes:
//
//   w_i' = (q_c - lambda_i) w_i + a_i C x + b_i C x',
//   x'   = (A + mu_m B C) x + B sum_j c_j w_j,
//
// a linear time-invariant system X' = L X in (w_1..w_nsim, x). The default
// integrator applies the exact propagator exp(L h); the trapezoidal rule is
// available as an A-stable alternative.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pdeode/certifier.hpp"
#include "pdeode/errors.hpp"
#include "pdeode/reduction.hpp"
#include "pdeode/spectral.hpp"

namespace pdeode {

enum class Integrator { ExactPropagator, ImplicitTrapezoid };

[[nodiscard]] inline const char* to_string(Integrator i) {
  return i == Integrator::ExactPropagator ? "exact-propagator" : "implicit-trapezoid";
}

struct SimulationConfig {
  std::size_t n_sim = 100;
  double t_end = 10.0;
  double dt_out = 0.01;
  Integrator integrator = Integrator::ExactPropagator;
  std::size_t substeps = 1;  // internal steps per output interval
  double divergence_threshold = 1e12;

  void validate() const {
    if (n_sim < 1) throw DomainError("n_sim must be >= 1");
    if (!(t_end > 0.0)) throw DomainError("t_end must be positive");
    if (!(dt_out > 0.0)) throw DomainError("dt_out must be positive");
    if (substeps < 1) throw DomainError("substeps must be >= 1");
  }
  [[nodiscard]] std::size_t samples() const {
    return static_cast<std::size_t>(std::floor(t_end / dt_out + 1e-9)) + 1;
  }
};

struct ModalState {
  Eigen::VectorXd w;
  Eigen::VectorXd x;
};

/// Coefficient data of the modal closed loop at order n_sim, plus the
/// integrals needed to evaluate the H1 norm of z = w + xi^2 y / d.
struct ModalSystem {
  Eigen::VectorXd lambda;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::RowVectorXd c;
  OdePlant ode;
  Eigen::MatrixXd A_e;
  double q_c = 0.0;
  double mu_m = 0.0;
  double cb = 0.0;
  double denominator = 1.0;
  TraceKind trace_kind = TraceKind::Dirichlet;
  Eigen::MatrixXd dphi_gram;  // int phi_i' phi_j'
  Eigen::VectorXd g0;         // int xi^2 phi_i
  Eigen::VectorXd g1;         // int xi phi_i'

  [[nodiscard]] Eigen::Index n_sim() const noexcept { return lambda.size(); }
  [[nodiscard]] Eigen::Index n_ode() const noexcept { return ode.n(); }

  [[nodiscard]] Eigen::MatrixXd generator() const {
    const Eigen::VectorXd diag = (q_c - lambda.array()).matrix();
    return detail::coupled_generator(diag, a, b, c, ode, A_e);
  }
};

[[nodiscard]] inline ModalSystem build_modal_system(const SpectralBasis& basis, const CoupledPlant& plant,
                                                    std::size_t n_sim) {
  if (basis.size() < n_sim) throw DomainError("build_modal_system: basis holds fewer than n_sim pairs");
  const LiftingData lift = lifting(plant);
  ModalSystem s;
  const auto n = static_cast<Eigen::Index>(n_sim);
  s.lambda.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.lambda[i] = basis.lambda(static_cast<std::size_t>(i) + 1);
  s.a = project(basis, lift.a, n_sim);
  s.b = project(basis, lift.b, n_sim);
  s.c = trace_coefficients(basis, plant.zeta_m(), plant.trace_kind(), n_sim);
  s.ode = plant.ode();
  s.A_e = s.ode.A + lift.mu_m * s.ode.B * s.ode.C;
  s.q_c = plant.q_c();
  s.mu_m = lift.mu_m;
  s.cb = s.ode.C.dot(s.ode.B);
  s.denominator = lift.denominator;
  s.trace_kind = plant.trace_kind();

  const QuadratureRule rule = basis.quadrature(n_sim);
  const auto nq = static_cast<Eigen::Index>(rule.size());
  Eigen::MatrixXd dv(nq, n);
  Eigen::MatrixXd v(nq, n);
  for (Eigen::Index k = 0; k < nq; ++k)
    for (Eigen::Index i = 0; i < n; ++i) {
      v(k, i) = basis.phi(static_cast<std::size_t>(i) + 1, rule.nodes[static_cast<std::size_t>(k)]);
      dv(k, i) = basis.dphi(static_cast<std::size_t>(i) + 1, rule.nodes[static_cast<std::size_t>(k)]);
    }
  Eigen::VectorXd w(nq), x(nq);
  for (Eigen::Index k = 0; k < nq; ++k) {
    w[k] = rule.weights[static_cast<std::size_t>(k)];
    x[k] = rule.nodes[static_cast<std::size_t>(k)];
  }
  s.dphi_gram = dv.transpose() * w.asDiagonal() * dv;
  s.g0 = v.transpose() * (w.array() * x.array() * x.array()).matrix();
  s.g1 = dv.transpose() * (w.array() * x.array()).matrix();
  return s;
}

/// Direct evaluation of the modal closed-loop vector field.
[[nodiscard]] inline ModalState rhs(const ModalState& st, const ModalSystem& s) {
  ModalState d;
  const double trace = s.c.dot(st.w);
  d.x = s.A_e * st.x + s.ode.B * trace;
  const double y = s.ode.C.dot(st.x);
  const double ydot = s.ode.C.dot(d.x);
  d.w = ((s.q_c - s.lambda.array()) * st.w.array() + s.a.array() * y + s.b.array() * ydot).matrix();
  return d;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<ModalState> states;
  std::vector<double> y;
  std::vector<double> trace;
  std::vector<double> h1_sq;
  std::vector<double> x_norm_sq;
  std::optional<std::vector<double>> lyapunov;
  bool diverged = false;
  double divergence_time = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

/// Modal initial data from w0 (or from z0, converted with y(0) = C x0).
[[nodiscard]] inline Eigen::VectorXd initial_modes(const SpectralBasis& basis, const CoupledPlant& plant,
                                                   const std::function<double(double)>& f, bool f_is_z0,
                                                   const Eigen::VectorXd& x0, std::size_t n_sim) {
  if (!f_is_z0) return project(basis, f, n_sim);
  const double y0 = plant.ode().C.dot(x0);
  const double d = plant.lifting_denominator();
  return project(basis, [&](double xi) { return f(xi) - xi * xi * y0 / d; }, n_sim);
}

[[nodiscard]] inline Trajectory integrate(const SimulationConfig& cfg, const Eigen::VectorXd& w0,
                                          const Eigen::VectorXd& x0, const ModalSystem& sys) {
  cfg.validate();
  if (w0.size() != sys.n_sim()) throw DomainError("integrate: w0 must have n_sim entries");
  if (x0.size() != sys.n_ode()) throw DomainError("integrate: x0 must have n entries");
  const Eigen::Index nw = sys.n_sim();
  const Eigen::Index dim = nw + sys.n_ode();
  const Eigen::MatrixXd L = sys.generator();
  const double h = cfg.dt_out / static_cast<double>(cfg.substeps);
  Eigen::MatrixXd step;
  if (cfg.integrator == Integrator::ExactPropagator) {
    step = (L * h).exp();
  } else {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(dim, dim);
    step = (id - 0.5 * h * L).partialPivLu().solve(id + 0.5 * h * L);
  }

  Trajectory tr;
  const std::size_t count = cfg.samples();
  tr.times.reserve(count);
  tr.states.reserve(count);
  Eigen::VectorXd X(dim);
  X << w0, x0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * cfg.dt_out;
    if (k > 0)
      for (std::size_t j = 0; j < cfg.substeps; ++j) X = step * X;
    if (!X.allFinite() || X.norm() > cfg.divergence_threshold) {
      tr.diverged = true;
      tr.divergence_time = t;
      break;
    }
    tr.times.push_back(t);
    tr.states.push_back({X.head(nw), X.tail(sys.n_ode())});
  }
  return tr;
}

/// Fills the per-sample observables; V needs a certificate whose order does
/// not exceed n_sim.
inline void observe(Trajectory& tr, const ModalSystem& sys, const Certificate* cert = nullptr) {
  const std::size_t n = tr.size();
  tr.y.resize(n);
  tr.trace.resize(n);
  tr.h1_sq.resize(n);
  tr.x_norm_sq.resize(n);
  const double d = sys.denominator;
  const double lift_sq = 1.0 / 5.0 + 4.0 / 3.0;  // int xi^4 + int (2 xi)^2
  std::size_t nc = 0;
  if (cert) {
    nc = cert->n_modes;
    if (static_cast<Eigen::Index>(nc) >= sys.n_sim()) throw DomainError("observe: certificate order must be < n_sim");
    if (cert->P.rows() != static_cast<Eigen::Index>(nc) + sys.n_ode())
      throw DomainError("observe: certificate dimension does not match the plant");
    tr.lyapunov.emplace(n);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& st = tr.states[k];
    const double y = sys.ode.C.dot(st.x);
    tr.y[k] = y;
    tr.trace[k] = sys.c.dot(st.w) + sys.mu_m * y;
    const double l2 = st.w.squaredNorm() + 2.0 * (y / d) * sys.g0.dot(st.w);
    const double grad = st.w.dot(sys.dphi_gram * st.w) + 4.0 * (y / d) * sys.g1.dot(st.w);
    tr.h1_sq[k] = l2 + grad + (y / d) * (y / d) * lift_sq;
    tr.x_norm_sq[k] = st.x.squaredNorm();
    if (cert) {
      const auto nn = static_cast<Eigen::Index>(nc);
      Eigen::VectorXd X(nn + sys.n_ode());
      X << st.w.head(nn), st.x;
      const Eigen::Index rest = sys.n_sim() - nn;
      const double tail = (sys.lambda.tail(rest).array() * st.w.tail(rest).array().square()).sum();
      (*tr.lyapunov)[k] = X.dot(cert->P * X) + tail;
    }
  }
}

/// Least-squares slope of log(values) against time over samples [first, end),
/// reported as a decay rate (-slope).
[[nodiscard]] inline double fit_decay_rate(const std::vector<double>& times, const std::vector<double>& values,
                                           std::size_t first) {
  double st = 0, sv = 0, stt = 0, stv = 0;
  std::size_t m = 0;
  for (std::size_t k = first; k < values.size(); ++k) {
    const double v = std::log(std::max(values[k], std::numeric_limits<double>::min()));
    st += times[k];
    sv += v;
    stt += times[k] * times[k];
    stv += times[k] * v;
    ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double md = static_cast<double>(m);
  const double slope = (md * stv - st * sv) / (md * stt - st * st);
  return -slope;
}

struct EnvelopeReport {
  bool holds = false;
  std::optional<std::size_t> first_violation;
  double worst_ratio = 0.0;   // max_k V(t_k) / (e^{-2 eta t_k} V(0))
  double fitted_rate = 0.0;   // decay rate of ||z||_H1^2 + ||x||^2, final half horizon
  double trace_rate = 0.0;    // decay rate of the running tail sup of trace^2, final half horizon
};

[[nodiscard]] inline EnvelopeReport envelope_check(const Trajectory& tr, double eta, double tol = 1e-6) {
  if (!tr.lyapunov) throw ContractViolation("envelope_check needs a trajectory observed with a certificate");
  if (tr.size() < 2) throw DomainError("envelope_check needs at least two samples");
  EnvelopeReport rep;
  const auto& V = *tr.lyapunov;
  const double v0 = V[0];
  rep.holds = true;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double bound = std::exp(-2.0 * eta * tr.times[k]) * v0;
    const double ratio = bound > 0.0 ? V[k] / bound : (V[k] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (V[k] > bound * (1.0 + tol) && rep.holds) {
      rep.holds = false;
      rep.first_violation = k;
    }
  }
  const double half = 0.5 * tr.times.back();
  std::size_t first = 0;
  while (first < tr.size() && tr.times[first] < half) ++first;
  std::vector<double> energy(tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) energy[k] = tr.h1_sq[k] + tr.x_norm_sq[k];
  rep.fitted_rate = fit_decay_rate(tr.times, energy, first);
  std::vector<double> env(tr.size());
  double run = 0.0;
  for (std::size_t k = tr.size(); k-- > 0;) {
    run = std::max(run, tr.trace[k] * tr.trace[k]);
    env[k] = run;
  }
  rep.trace_rate = fit_decay_rate(tr.times, env, first);
  return rep;
}

/// CSV export: t, x_1..x_n, y, trace, h1_sq, x_norm_sq[, lyapunov].
inline void write_csv(std::ostream& os, const Trajectory& tr) {
  const Eigen::Index n = tr.states.empty() ? 0 : tr.states.front().x.size();
  os << "t";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
  os << ",y,trace,h1_sq,x_norm_sq";
  if (tr.lyapunov) os << ",lyapunov";
  os << "\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < tr.size(); ++k) {
    put(tr.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',';
      put(tr.states[k].x[i]);
    }
    for (double v : {tr.y[k], tr.trace[k], tr.h1_sq[k], tr.x_norm_sq[k]}) {
      os << ',';
      put(v);
    }
    if (tr.lyapunov) {
      os << ',';
      put((*tr.lyapunov)[k]);
    }
    os << "\n";
  }
}

}  // namespace pdeode
