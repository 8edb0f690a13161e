#pragma once

// Spectral reduction of the coupled reaction-diffusion / LTI system
//
//   z_t = (p z_x)_x - qt z,   cos(t1) z(0) - sin(t1) z_x(0) = 0,
//                             cos(t2) z(1) + sin(t2) z_x(1) = y = C x,
//   x'  = A x + B z(zeta)     (Dirichlet trace) or B z_x(zeta) (Neumann trace),
//
// with qt = q - q_c. The change of variable w = z - xi^2 y / d,
// d = cos(t2) + 2 sin(t2), homogenizes the boundary condition; the modal
// coefficients of w then obey a finite model X' = F X + G R driven by the
// residue R = sum_{i > N} c_i w_i.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "pdeode/errors.hpp"
#include "pdeode/field.hpp"
#include "pdeode/spectral.hpp"

namespace pdeode {

enum class TraceKind { Dirichlet, Neumann };

[[nodiscard]] inline const char* to_string(TraceKind k) {
  return k == TraceKind::Dirichlet ? "dirichlet" : "neumann";
}

struct OdePlant {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;

  OdePlant() = default;
  OdePlant(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::RowVectorXd c)
      : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
    validate();
  }

  [[nodiscard]] Eigen::Index n() const noexcept { return A.rows(); }

  void validate() const {
    if (A.rows() < 1 || A.rows() != A.cols()) throw DomainError("ODE matrix A must be square with n >= 1");
    if (B.size() != A.rows()) throw DomainError("ODE input vector B must have n entries");
    if (C.size() != A.rows()) throw DomainError("ODE output row C must have n entries");
    if (!A.allFinite() || !B.allFinite() || !C.allFinite()) throw DomainError("ODE matrices must be finite");
  }
};

struct ReactionSplit {
  ScalarField q;
  double q_c = 0.0;
};

namespace detail {
inline constexpr std::size_t kDenseSamples = 4097;
inline double exact_cos(double theta) { return theta == kHalfPi ? 0.0 : std::cos(theta); }
inline double exact_sin(double theta) { return theta == 0.0 ? 0.0 : (theta == kHalfPi ? 1.0 : std::sin(theta)); }
}  // namespace detail

/// Splits qt = q - q_c with q > 0. Without an explicit shift,
/// q_c = max(0, -min qt) + 1 so that q >= 1.
[[nodiscard]] inline ReactionSplit decompose_reaction(const ScalarField& q_tilde,
                                                      std::optional<double> q_c = std::nullopt) {
  if (q_c) {
    if (!std::isfinite(*q_c)) throw DomainError("q_c must be finite");
    const std::size_t n = detail::kDenseSamples;
    for (std::size_t k = 0; k < n; ++k) {
      const double x = static_cast<double>(k) / static_cast<double>(n - 1);
      const double q = q_tilde(x) + *q_c;
      if (!(q > 0.0))
        throw DomainError("q = q_tilde + q_c = " + ScalarField::format_number(q) + " <= 0 at xi = " +
                          ScalarField::format_number(x));
    }
    return {q_tilde.shifted(*q_c), *q_c};
  }
  const double shift = std::max(0.0, -q_tilde.sampled_range(detail::kDenseSamples).first) + 1.0;
  return {q_tilde.shifted(shift), shift};
}

class CoupledPlant {
 public:
  CoupledPlant(ScalarField p, ScalarField q_tilde, double theta1, double theta2, OdePlant ode,
               double zeta_m, TraceKind kind, std::optional<double> q_c = std::nullopt)
      : q_tilde_(std::move(q_tilde)),
        split_(decompose_reaction(q_tilde_, q_c)),
        sl_(std::move(p), split_.q, theta1, theta2),
        ode_(std::move(ode)),
        zeta_m_(zeta_m),
        kind_(kind) {
    ode_.validate();
    if (!(zeta_m >= 0.0 && zeta_m <= 1.0)) throw DomainError("trace location zeta_m must lie in [0, 1]");
  }

  [[nodiscard]] const SturmLiouvilleProblem& sl() const noexcept { return sl_; }
  [[nodiscard]] const ScalarField& q_tilde() const noexcept { return q_tilde_; }
  [[nodiscard]] const ScalarField& q() const noexcept { return split_.q; }
  [[nodiscard]] double q_c() const noexcept { return split_.q_c; }
  [[nodiscard]] const OdePlant& ode() const noexcept { return ode_; }
  [[nodiscard]] double zeta_m() const noexcept { return zeta_m_; }
  [[nodiscard]] TraceKind trace_kind() const noexcept { return kind_; }

  /// d = cos(theta2) + 2 sin(theta2), at least 1 on [0, pi/2].
  [[nodiscard]] double lifting_denominator() const {
    return detail::exact_cos(sl_.theta2()) + 2.0 * detail::exact_sin(sl_.theta2());
  }

 private:
  ScalarField q_tilde_;
  ReactionSplit split_;
  SturmLiouvilleProblem sl_;
  OdePlant ode_;
  double zeta_m_;
  TraceKind kind_;
};

struct LiftingData {
  std::function<double(double)> a;
  std::function<double(double)> b;
  std::function<double(double)> db;
  double mu_m = 0.0;
  double denominator = 1.0;
};

/// a = (2p + 2 xi p' + (q_c - q) xi^2)/d, b = -xi^2/d, mu_m = -b(zeta) for a
/// Dirichlet trace and -b'(zeta) for a Neumann trace.
[[nodiscard]] inline LiftingData lifting(const CoupledPlant& plant) {
  LiftingData out;
  const double d = plant.lifting_denominator();
  const ScalarField p = plant.sl().p();
  const ScalarField q = plant.q();
  const double qc = plant.q_c();
  out.denominator = d;
  out.a = [p, q, qc, d](double x) { return (2.0 * p(x) + 2.0 * x * p.derivative(x) + (qc - q(x)) * x * x) / d; };
  out.b = [d](double x) { return -x * x / d; };
  out.db = [d](double x) { return -2.0 * x / d; };
  const double z = plant.zeta_m();
  out.mu_m = plant.trace_kind() == TraceKind::Dirichlet ? z * z / d : 2.0 * z / d;
  return out;
}

/// c_i = phi_i(zeta) (Dirichlet) or phi_i'(zeta) (Neumann), i = 1..n.
[[nodiscard]] inline Eigen::RowVectorXd trace_coefficients(const SpectralBasis& basis, double zeta,
                                                           TraceKind kind, std::size_t n) {
  if (n > basis.size()) throw DomainError("trace_coefficients: basis holds fewer than n pairs");
  Eigen::RowVectorXd c(static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i <= n; ++i)
    c[static_cast<Eigen::Index>(i) - 1] = kind == TraceKind::Dirichlet ? basis.phi(i, zeta) : basis.dphi(i, zeta);
  return c;
}

struct ReducedModel {
  std::size_t n_modes = 0;
  Eigen::Index n_ode = 0;
  TraceKind trace_kind = TraceKind::Dirichlet;
  Eigen::VectorXd lambda;  // lambda_1 .. lambda_{N+1}
  Eigen::MatrixXd A_N;
  Eigen::VectorXd B_aN;
  Eigen::VectorXd B_bN;
  Eigen::RowVectorXd C_N;
  Eigen::MatrixXd A_e;     // A + mu_m B C
  Eigen::MatrixXd F;
  Eigen::VectorXd G;
  Eigen::MatrixXd H;
  double tail_a = 0.0;
  double tail_b = 0.0;
  TailBound tail_const;
  std::optional<double> epsilon;  // Neumann only
  double cb = 0.0;
  double q_c = 0.0;
  double mu_m = 0.0;

  [[nodiscard]] Eigen::Index dim() const noexcept { return F.rows(); }
  [[nodiscard]] double lambda_next() const { return lambda[static_cast<Eigen::Index>(n_modes)]; }
};

/// Block matrices of the truncated model for coefficient data (A_N, B_a, B_b,
/// C_N) and plant (A, B, C, mu_m). Shared by the reduction and the simulator.
namespace detail {

inline Eigen::MatrixXd coupled_generator(const Eigen::VectorXd& diag, const Eigen::VectorXd& ba,
                                         const Eigen::VectorXd& bb, const Eigen::RowVectorXd& c,
                                         const OdePlant& ode, const Eigen::MatrixXd& ae) {
  const Eigen::Index n = diag.size();
  const Eigen::Index m = ode.n();
  const double cb = ode.C.dot(ode.B);
  Eigen::MatrixXd f(n + m, n + m);
  f.topLeftCorner(n, n) = diag.asDiagonal();
  f.topLeftCorner(n, n) += cb * bb * c;
  f.topRightCorner(n, m) = ba * ode.C + bb * (ode.C * ae);
  f.bottomLeftCorner(m, n) = ode.B * c;
  f.bottomRightCorner(m, m) = ae;
  return f;
}

}  // namespace detail

/// Truncated model of order n. `epsilon` is required for a Neumann trace
/// and must be absent for a Dirichlet trace.
[[nodiscard]] inline ReducedModel assemble(const SpectralBasis& basis, const CoupledPlant& plant, std::size_t n,
                                           std::optional<double> epsilon = std::nullopt,
                                           const TailSupBounds& sup = {}) {
  if (n == 0) throw DomainError("assemble: truncation order must be >= 1");
  if (basis.size() < n + 1) throw DomainError("assemble: basis must hold at least N+1 pairs");
  const bool neumann = plant.trace_kind() == TraceKind::Neumann;
  if (neumann && !epsilon) throw DomainError("assemble: epsilon is required for a Neumann trace");
  if (!neumann && epsilon) throw DomainError("assemble: epsilon applies to Neumann traces only");

  const LiftingData lift = lifting(plant);
  const OdePlant& ode = plant.ode();
  const auto nn = static_cast<Eigen::Index>(n);

  ReducedModel m;
  m.n_modes = n;
  m.n_ode = ode.n();
  m.trace_kind = plant.trace_kind();
  m.q_c = plant.q_c();
  m.mu_m = lift.mu_m;
  m.epsilon = epsilon;
  m.cb = ode.C.dot(ode.B);

  m.lambda.resize(nn + 1);
  for (Eigen::Index i = 0; i <= nn; ++i) m.lambda[i] = basis.lambda(static_cast<std::size_t>(i) + 1);
  Eigen::VectorXd diag = (m.q_c - m.lambda.head(nn).array()).matrix();
  m.A_N = diag.asDiagonal();
  m.B_aN = project(basis, lift.a, n);
  m.B_bN = project(basis, lift.b, n);
  m.C_N = trace_coefficients(basis, plant.zeta_m(), plant.trace_kind(), n);
  m.A_e = ode.A + lift.mu_m * ode.B * ode.C;

  m.F = detail::coupled_generator(diag, m.B_aN, m.B_bN, m.C_N, ode, m.A_e);
  m.G.resize(nn + m.n_ode);
  m.G.head(nn) = m.B_bN * m.cb;
  m.G.tail(m.n_ode) = ode.B;

  m.tail_a = tail_norm(basis, lift.a, n).value;
  m.tail_b = tail_norm(basis, lift.b, n).value;

  m.H = Eigen::MatrixXd::Zero(nn + m.n_ode, nn + m.n_ode);
  m.H.topLeftCorner(nn, nn) = m.tail_b * m.cb * m.cb * (m.C_N.transpose() * m.C_N);
  const Eigen::RowVectorXd cae = ode.C * m.A_e;
  m.H.bottomRightCorner(m.n_ode, m.n_ode) =
      m.tail_a * (ode.C.transpose() * ode.C) + m.tail_b * (cae.transpose() * cae);

  m.tail_const = neumann ? tail_m2(basis, n, plant.zeta_m(), *epsilon, sup) : tail_m1(basis, n, plant.zeta_m(), sup);
  return m;
}

/// Basis suitable for the plant: closed form when available, transcendental
/// roots for other constant-coefficient problems, finite differences otherwise.
[[nodiscard]] inline SpectralBasis default_basis(const SturmLiouvilleProblem& sl, std::size_t n_max,
                                                 std::size_t grid_size = 0) {
  if (sl.constant_coefficients()) {
    const double p = *sl.p().constant_value();
    const double q = *sl.q().constant_value();
    if (detail::closed_form_mode(p, q, sl.theta1(), sl.theta2(), 1))
      return closed_form_basis(p, q, sl.theta1(), sl.theta2(), n_max);
    return robin_basis(sl, n_max);
  }
  if (grid_size == 0) grid_size = std::max<std::size_t>(8192, 16 * n_max);
  return discretized_basis(sl, n_max, grid_size);
}

}  // namespace pdeode
