#pragma once

// Stability certificates for the truncated model. With X = (w_1..w_N, x),
// a certificate (P, alpha, beta) at rate eta satisfies
//
//   Theta1 = [[F^T P + P F + 2 eta P + alpha H, P G],
//             [G^T P, alpha tb (CB)^2 - beta]]                       <= 0,
//   Theta2 = [[-lambda_{N+1} + q_c + eta + T, sqrt(2 lambda_{N+1})],
//             [sqrt(2 lambda_{N+1}), -alpha]]                        <= 0,
//
// with T = beta M1 / 2 (Dirichlet trace) or beta M2 lambda_{N+1}^{1/2+eps} / 2
// (Neumann trace), and for the Neumann trace additionally
//
//   Theta3 = [[1 - beta M2 / (2 lambda_{N+1}^{1/2-eps}), sqrt(2)], [sqrt(2), alpha]] > 0.
//
// These conditions are sufficient only; a failed search reports that no
// certificate was found, never that the loop is unstable.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "pdeode/errors.hpp"
#include "pdeode/reduction.hpp"
#include "pdeode/riccati.hpp"

namespace pdeode {

inline constexpr double kStrictMargin = 1e-9;

[[nodiscard]] inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count == 0) throw DomainError("log_grid: need 0 < lo <= hi and count >= 1");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t k = 0; k < count; ++k)
    g[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

struct SearchGrids {
  std::vector<double> alpha = log_grid(2.01, 1e3, 40);
  std::vector<double> beta = log_grid(1e-4, 1e6, 60);

  void validate() const {
    if (alpha.empty() || beta.empty()) throw DomainError("search grids must be nonempty");
    for (double a : alpha)
      if (!(a > 2.0)) throw DomainError("alpha grid points must exceed 2");
    for (double b : beta)
      if (!(b > 0.0)) throw DomainError("beta grid points must be positive");
  }
};

struct CertificateRequest {
  ReducedModel model;
  double eta = 0.0;
  SearchGrids grids;
};

struct Margins {
  double theta1_max = 0.0;
  double theta2_max = 0.0;
  std::optional<double> theta3_min;
  double p_min = 0.0;
};

struct Certificate {
  Eigen::MatrixXd P;
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  std::optional<double> epsilon;
  std::size_t n_modes = 0;
  TraceKind trace_kind = TraceKind::Dirichlet;
  Margins margins;
};

namespace detail {

inline double theta2_tail_term(const ReducedModel& m, double beta) {
  const double lam = m.lambda_next();
  if (m.trace_kind == TraceKind::Dirichlet) return beta * m.tail_const.value / 2.0;
  return beta * m.tail_const.value * std::pow(lam, 0.5 + *m.epsilon) / 2.0;
}

inline double s_value(const ReducedModel& m, double alpha, double beta) {
  return beta - alpha * m.tail_b * m.cb * m.cb;
}

}  // namespace detail

[[nodiscard]] inline Eigen::MatrixXd build_theta1(const ReducedModel& m, const Eigen::MatrixXd& P, double alpha,
                                                  double beta, double eta) {
  const Eigen::Index n = m.dim();
  if (P.rows() != n || P.cols() != n) throw DomainError("build_theta1: P has wrong dimensions");
  Eigen::MatrixXd t(n + 1, n + 1);
  t.topLeftCorner(n, n) = m.F.transpose() * P + P * m.F + 2.0 * eta * P + alpha * m.H;
  const Eigen::VectorXd pg = P * m.G;
  t.topRightCorner(n, 1) = pg;
  t.bottomLeftCorner(1, n) = pg.transpose();
  t(n, n) = alpha * m.tail_b * m.cb * m.cb - beta;
  return detail::symmetrize(t);
}

[[nodiscard]] inline Eigen::Matrix2d build_theta2(const ReducedModel& m, double alpha, double beta, double eta) {
  const double lam = m.lambda_next();
  Eigen::Matrix2d t;
  const double off = std::sqrt(2.0 * lam);
  t << -lam + m.q_c + eta + detail::theta2_tail_term(m, beta), off, off, -alpha;
  return t;
}

[[nodiscard]] inline Eigen::Matrix2d build_theta3(const ReducedModel& m, double alpha, double beta) {
  if (m.trace_kind != TraceKind::Neumann || !m.epsilon)
    throw ContractViolation("build_theta3 applies to Neumann-trace models only");
  const double lam = m.lambda_next();
  Eigen::Matrix2d t;
  t << 1.0 - beta * m.tail_const.value / (2.0 * std::pow(lam, 0.5 - *m.epsilon)), std::sqrt(2.0), std::sqrt(2.0),
      alpha;
  return t;
}

/// Determinant forms of the 2x2 conditions.
[[nodiscard]] inline bool theta2_negative(const ReducedModel& m, double alpha, double beta, double eta) {
  const double lam = m.lambda_next();
  return alpha > 0.0 && alpha * (lam - m.q_c - eta - detail::theta2_tail_term(m, beta)) > 2.0 * lam;
}

[[nodiscard]] inline bool theta3_positive(const ReducedModel& m, double alpha, double beta) {
  const Eigen::Matrix2d t = build_theta3(m, alpha, beta);
  return alpha > 0.0 && alpha * t(0, 0) > 2.0;
}

enum class PMethod { Riccati, Subgradient, None };

[[nodiscard]] inline const char* to_string(PMethod m) {
  switch (m) {
    case PMethod::Riccati: return "riccati";
    case PMethod::Subgradient: return "subgradient";
    case PMethod::None: return "none";
  }
  return "?";
}

struct PFeasibility {
  bool feasible = false;
  Eigen::MatrixXd P;
  double margin = std::numeric_limits<double>::infinity();  // lambda_max(Theta1), best found
  double p_min = 0.0;
  PMethod method = PMethod::None;
};

namespace detail {

inline void score(PFeasibility& best, const ReducedModel& m, const Eigen::MatrixXd& P, double alpha, double beta,
                  double eta, PMethod method) {
  if (!P.allFinite()) return;
  const double margin = max_symmetric_eigenvalue(build_theta1(m, P, alpha, beta, eta));
  const double pmin = min_symmetric_eigenvalue(P);
  const bool ok = margin < -kStrictMargin && pmin > kStrictMargin;
  if ((ok && !best.feasible) || (ok == best.feasible && margin < best.margin)) {
    best.feasible = ok;
    best.P = P;
    best.margin = margin;
    best.p_min = pmin;
    best.method = method;
  }
}

// Projected subgradient descent on lambda_max(Theta1(P)) over P >= 0.
inline void subgradient_search(PFeasibility& best, const ReducedModel& m, double alpha, double beta, double eta,
                               int iterations = 400) {
  const Eigen::Index n = m.dim();
  const Eigen::MatrixXd fe = m.F + eta * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd P = best.P.size() == n * n && best.P.allFinite()
                          ? best.P
                          : (is_hurwitz(fe) ? solve_lyapunov(fe, Eigen::MatrixXd::Identity(n, n))
                                            : Eigen::MatrixXd::Identity(n, n));
  double step = 0.1 * std::max(P.norm(), 1.0);
  for (int k = 0; k < iterations && !best.feasible; ++k) {
    const Eigen::MatrixXd theta = build_theta1(m, P, alpha, beta, eta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta);
    const Eigen::VectorXd v = es.eigenvectors().col(n);
    const Eigen::VectorXd vx = v.head(n);
    const Eigen::VectorXd u = fe * vx + m.G * v[n];
    Eigen::MatrixXd grad = vx * u.transpose() + u * vx.transpose();
    const double gn = grad.norm();
    if (gn == 0.0) break;
    P -= (step / std::sqrt(static_cast<double>(k) + 1.0)) * grad / gn;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ps(symmetrize(P));
    const Eigen::VectorXd clipped = ps.eigenvalues().cwiseMax(1e-8);
    P = ps.eigenvectors() * clipped.asDiagonal() * ps.eigenvectors().transpose();
    score(best, m, P, alpha, beta, eta, PMethod::Subgradient);
  }
}

}  // namespace detail

/// P-subproblem at fixed (alpha, beta, eta). By a Schur complement on the
/// scalar block, Theta1 < 0 iff s > 0 and
///   F_eta^T P + P F_eta + alpha H + P G G^T P / s < 0,  F_eta = F + eta I,
/// which is solved as the Riccati equation with constant term alpha H + delta I,
/// delta = 1e-6 ||F||_2.
[[nodiscard]] inline PFeasibility feasible_P(const ReducedModel& m, double alpha, double beta, double eta) {
  PFeasibility best;
  const double s = detail::s_value(m, alpha, beta);
  if (!(s > 0.0)) return best;
  const Eigen::Index n = m.dim();
  const Eigen::MatrixXd fe = m.F + eta * Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.F);
  const double delta = 1e-6 * svd.singularValues()[0];
  const Eigen::MatrixXd r = m.G * m.G.transpose() / s;
  const Eigen::MatrixXd q = alpha * m.H + delta * Eigen::MatrixXd::Identity(n, n);
  const RiccatiResult rr = solve_care(fe, r, q);
  if (rr.solved) detail::score(best, m, rr.P, alpha, beta, eta, PMethod::Riccati);
  if (!best.feasible && rr.imaginary_axis) detail::subgradient_search(best, m, alpha, beta, eta);
  return best;
}

struct VerifyReport {
  bool verdict = false;
  Margins margins;
  std::vector<std::string> failures;
};

/// Independent audit: rebuilds every Theta block entry by entry from the
/// model data and checks the certificate invariants with margin 1e-9.
[[nodiscard]] inline VerifyReport verify(const Certificate& c, const ReducedModel& m) {
  VerifyReport rep;
  auto fail = [&](std::string why) { rep.failures.push_back(std::move(why)); };
  const Eigen::Index n = m.dim();
  if (c.P.rows() != n || c.P.cols() != n) {
    fail("P dimension does not match the model");
    return rep;
  }
  if (c.n_modes != m.n_modes) fail("truncation order differs from the model");
  if (c.trace_kind != m.trace_kind) fail("trace kind differs from the model");
  if (m.trace_kind == TraceKind::Neumann && (!c.epsilon || !m.epsilon || std::abs(*c.epsilon - *m.epsilon) > 1e-15))
    fail("epsilon differs from the model");
  if (!(c.eta >= 0.0)) fail("eta must be nonnegative");
  if (!(c.alpha > 0.0)) fail("alpha must be positive");
  if (!(c.beta > 0.0)) fail("beta must be positive");
  if (!c.P.allFinite()) {
    fail("P has non-finite entries");
    return rep;
  }
  if ((c.P - c.P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.P.cwiseAbs().maxCoeff()))
    fail("P is not symmetric");

  const Eigen::MatrixXd P = 0.5 * (c.P + c.P.transpose());
  Eigen::MatrixXd t1 = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = 2.0 * c.eta * P(i, j) + c.alpha * m.H(i, j);
      for (Eigen::Index k = 0; k < n; ++k) v += m.F(k, i) * P(k, j) + P(i, k) * m.F(k, j);
      t1(i, j) = v;
    }
    double pg = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) pg += P(i, k) * m.G[k];
    t1(i, n) = pg;
    t1(n, i) = pg;
  }
  t1(n, n) = c.alpha * m.tail_b * m.cb * m.cb - c.beta;
  t1 = 0.5 * (t1 + t1.transpose());

  const double lam = m.lambda_next();
  const double tail = m.tail_const.value;
  const double tterm = m.trace_kind == TraceKind::Dirichlet
                           ? c.beta * tail / 2.0
                           : c.beta * tail * std::pow(lam, 0.5 + m.epsilon.value_or(0.0)) / 2.0;
  Eigen::Matrix2d t2;
  t2(0, 0) = -lam + m.q_c + c.eta + tterm;
  t2(0, 1) = t2(1, 0) = std::sqrt(2.0 * lam);
  t2(1, 1) = -c.alpha;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(t1, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> e2(t2, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(P, Eigen::EigenvaluesOnly);
  rep.margins.theta1_max = e1.eigenvalues().maxCoeff();
  rep.margins.theta2_max = e2.eigenvalues().maxCoeff();
  rep.margins.p_min = ep.eigenvalues().minCoeff();
  if (!(rep.margins.p_min > kStrictMargin)) fail("P is not positive definite beyond 1e-9");
  if (!(rep.margins.theta1_max < -kStrictMargin)) fail("Theta1 is not negative definite beyond 1e-9");
  if (!(rep.margins.theta2_max < -kStrictMargin)) fail("Theta2 is not negative definite beyond 1e-9");

  if (m.trace_kind == TraceKind::Neumann) {
    const double eps = m.epsilon.value_or(0.0);
    Eigen::Matrix2d t3;
    t3(0, 0) = 1.0 - c.beta * tail / (2.0 * std::pow(lam, 0.5 - eps));
    t3(0, 1) = t3(1, 0) = std::sqrt(2.0);
    t3(1, 1) = c.alpha;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> e3(t3, Eigen::EigenvaluesOnly);
    rep.margins.theta3_min = e3.eigenvalues().minCoeff();
    if (!(*rep.margins.theta3_min > kStrictMargin)) fail("Theta3 is not positive definite beyond 1e-9");
  }
  rep.verdict = rep.failures.empty();
  return rep;
}

struct FailureCounts {
  std::size_t theta3 = 0;        // Theta3 not positive
  std::size_t theta2 = 0;        // Theta2 not negative
  std::size_t schur = 0;         // s <= 0
  std::size_t not_hurwitz = 0;   // F + eta I not Hurwitz (all points)
  std::size_t theta1 = 0;        // no P found
  std::size_t verify = 0;        // P found but rejected by the audit
};

struct SearchResult {
  std::optional<Certificate> certificate;
  FailureCounts failures;
  std::size_t points = 0;
  double best_margin = std::numeric_limits<double>::infinity();
};

/// Scans alpha ascending, then beta ascending; the first grid point whose
/// certificate passes verify wins.
[[nodiscard]] inline SearchResult search_certificate(const CertificateRequest& req) {
  req.grids.validate();
  if (!(req.eta >= 0.0)) throw DomainError("eta must be nonnegative");
  const ReducedModel& m = req.model;
  const bool neumann = m.trace_kind == TraceKind::Neumann;
  SearchResult out;
  const Eigen::Index n = m.dim();
  const bool hurwitz = is_hurwitz(m.F + req.eta * Eigen::MatrixXd::Identity(n, n));

  for (double alpha : req.grids.alpha) {
    for (double beta : req.grids.beta) {
      ++out.points;
      if (neumann && !theta3_positive(m, alpha, beta)) {
        ++out.failures.theta3;
        continue;
      }
      if (!theta2_negative(m, alpha, beta, req.eta)) {
        ++out.failures.theta2;
        continue;
      }
      if (!(detail::s_value(m, alpha, beta) > 0.0)) {
        ++out.failures.schur;
        continue;
      }
      if (!hurwitz) {
        ++out.failures.not_hurwitz;
        continue;
      }
      PFeasibility pf = feasible_P(m, alpha, beta, req.eta);
      out.best_margin = std::min(out.best_margin, pf.margin);
      if (!pf.feasible) {
        ++out.failures.theta1;
        continue;
      }
      Certificate c;
      c.P = std::move(pf.P);
      c.alpha = alpha;
      c.beta = beta;
      c.eta = req.eta;
      c.epsilon = m.epsilon;
      c.n_modes = m.n_modes;
      c.trace_kind = m.trace_kind;
      const VerifyReport rep = verify(c, m);
      if (!rep.verdict) {
        ++out.failures.verify;
        continue;
      }
      c.margins = rep.margins;
      out.certificate = std::move(c);
      return out;
    }
  }
  return out;
}

struct DecayProbe {
  double eta = 0.0;
  bool feasible = false;
};

struct MaxDecayResult {
  double eta_star = 0.0;
  Certificate certificate;
  std::vector<DecayProbe> trace;
  bool monotone = true;  // no feasible probe above an infeasible one
};

/// Largest certified eta by bisection on [0, min(lambda_{N+1} - q_c, -max Re eig F)],
/// tolerance `tol`.
[[nodiscard]] inline MaxDecayResult max_decay(const ReducedModel& m, const SearchGrids& grids = {},
                                              double tol = 1e-3) {
  CertificateRequest req{m, 0.0, grids};
  SearchResult r0 = search_certificate(req);
  if (!r0.certificate) throw CertificateNotFound("max_decay: no certificate at eta = 0");
  MaxDecayResult out;
  out.certificate = *r0.certificate;
  out.trace.push_back({0.0, true});

  double lo = 0.0;
  double hi = std::min(m.lambda_next() - m.q_c, -max_real_eigenvalue(m.F));
  if (!(hi > 0.0)) return out;
  req.eta = hi;
  SearchResult rh = search_certificate(req);
  out.trace.push_back({hi, rh.certificate.has_value()});
  if (rh.certificate) {
    out.eta_star = hi;
    out.certificate = *rh.certificate;
    return out;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    req.eta = mid;
    SearchResult r = search_certificate(req);
    out.trace.push_back({mid, r.certificate.has_value()});
    if (r.certificate) {
      lo = mid;
      out.certificate = *r.certificate;
    } else {
      hi = mid;
    }
  }
  out.eta_star = lo;
  double lowest_infeasible = std::numeric_limits<double>::infinity();
  for (const auto& p : out.trace)
    if (!p.feasible) lowest_infeasible = std::min(lowest_infeasible, p.eta);
  for (const auto& p : out.trace)
    if (p.feasible && p.eta > lowest_infeasible) out.monotone = false;
  return out;
}

// Certificate documents ---------------------------------------------------

[[nodiscard]] inline nlohmann::json to_json(const Certificate& c) {
  nlohmann::json j;
  j["format"] = "pdeode-certificate/1";
  j["trace_kind"] = to_string(c.trace_kind);
  j["n_modes"] = c.n_modes;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["eta"] = c.eta;
  j["epsilon"] = c.epsilon ? nlohmann::json(*c.epsilon) : nlohmann::json(nullptr);
  j["dim"] = c.P.rows();
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(c.P.size()));
  for (Eigen::Index i = 0; i < c.P.rows(); ++i)
    for (Eigen::Index k = 0; k < c.P.cols(); ++k) rows.push_back(c.P(i, k));
  j["P"] = rows;
  nlohmann::json mj;
  mj["theta1_max"] = c.margins.theta1_max;
  mj["theta2_max"] = c.margins.theta2_max;
  mj["theta3_min"] = c.margins.theta3_min ? nlohmann::json(*c.margins.theta3_min) : nlohmann::json(nullptr);
  mj["p_min"] = c.margins.p_min;
  j["margins"] = mj;
  return j;
}

[[nodiscard]] inline Certificate certificate_from_json(const nlohmann::json& j) {
  try {
    Certificate c;
    const std::string kind = j.at("trace_kind").get<std::string>();
    if (kind == "dirichlet") {
      c.trace_kind = TraceKind::Dirichlet;
    } else if (kind == "neumann") {
      c.trace_kind = TraceKind::Neumann;
    } else {
      throw ConfigError("certificate: unknown trace_kind '" + kind + "'");
    }
    c.n_modes = j.at("n_modes").get<std::size_t>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.eta = j.at("eta").get<double>();
    if (j.contains("epsilon") && !j.at("epsilon").is_null()) c.epsilon = j.at("epsilon").get<double>();
    const auto dim = j.at("dim").get<Eigen::Index>();
    const auto rows = j.at("P").get<std::vector<double>>();
    if (dim < 1 || rows.size() != static_cast<std::size_t>(dim * dim))
      throw ConfigError("certificate: P must hold dim*dim entries");
    c.P.resize(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index k = 0; k < dim; ++k) c.P(i, k) = rows[static_cast<std::size_t>(i * dim + k)];
    if (j.contains("margins")) {
      const auto& mj = j.at("margins");
      c.margins.theta1_max = mj.value("theta1_max", 0.0);
      c.margins.theta2_max = mj.value("theta2_max", 0.0);
      if (mj.contains("theta3_min") && !mj.at("theta3_min").is_null())
        c.margins.theta3_min = mj.at("theta3_min").get<double>();
      c.margins.p_min = mj.value("p_min", 0.0);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
}

}  // namespace pdeode
