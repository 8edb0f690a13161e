#pragma once

// Dense linear-algebra kernels for the certifier: Hurwitz tests, Lyapunov
// equations, the matrix sign function and the Hamiltonian solution of
//
//   A^T P + P A + P R P + Q = 0,   R = R^T >= 0, Q = Q^T,
//
// whose stabilizing solution (A + R P Hurwitz) is read off the stable
// invariant subspace of [[A, R], [-Q, -A^T]].

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>

namespace pdeode {

namespace detail {
inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }
}  // namespace detail

[[nodiscard]] inline double max_real_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

[[nodiscard]] inline double max_symmetric_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

[[nodiscard]] inline double min_symmetric_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

[[nodiscard]] inline bool is_hurwitz(const Eigen::MatrixXd& m) { return max_real_eigenvalue(m) < 0.0; }

/// Solves A^T X + X A + Q = 0 through the Kronecker form (small dimensions).
[[nodiscard]] inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(A^T X + X A) = (I kron A^T + A^T kron I) vec(X), column-major vec.
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) += id(i, j) * a.transpose();
      k.block(i * n, j * n, n, n) += a(j, i) * id;
    }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), n * n);
  const Eigen::VectorXd x = k.partialPivLu().solve(rhs);
  return detail::symmetrize(Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n));
}

struct SignResult {
  Eigen::MatrixXd sign;
  int iterations = 0;
  bool converged = false;
};

/// Newton iteration S <- (c S + (c S)^{-1}) / 2 with determinant scaling
/// c = |det S|^{-1/n}. Requires no eigenvalues on the imaginary axis.
[[nodiscard]] inline SignResult matrix_sign(const Eigen::MatrixXd& m, int max_iter = 100) {
  const double n = static_cast<double>(m.rows());
  SignResult out;
  Eigen::MatrixXd s = m;
  bool scale = true;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(s);
    double c = 1.0;
    if (scale) {
      const Eigen::VectorXd u = lu.matrixLU().diagonal();
      double logdet = 0.0;
      for (Eigen::Index i = 0; i < u.size(); ++i) logdet += std::log(std::abs(u[i]));
      c = std::exp(-logdet / n);
      if (!std::isfinite(c)) c = 1.0;
    }
    const Eigen::MatrixXd next = 0.5 * (c * s + lu.inverse() / c);
    const double change = (next - s).lpNorm<1>();
    const double size = next.lpNorm<1>();
    s = next;
    out.iterations = it + 1;
    if (!s.allFinite()) return out;
    if (change <= 1e-2 * size) scale = false;
    if (change <= 1e-13 * size) {
      out.converged = true;
      break;
    }
  }
  out.sign = std::move(s);
  if (!out.converged) {
    // Quadratic convergence may stall at round-off level just above the
    // threshold; accept if S^2 = I to working accuracy.
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    out.converged = (out.sign * out.sign - id).lpNorm<1>() <= 1e-8 * std::max(1.0, out.sign.lpNorm<1>());
  }
  return out;
}

struct RiccatiResult {
  Eigen::MatrixXd P;
  bool solved = false;
  bool imaginary_axis = false;  // Hamiltonian eigenvalue on (or too close to) iR
};

/// Stabilizing solution of A^T P + P A + P R P + Q = 0.
[[nodiscard]] inline RiccatiResult solve_care(const Eigen::MatrixXd& a, const Eigen::MatrixXd& r,
                                              const Eigen::MatrixXd& q) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd ham(2 * n, 2 * n);
  ham << a, r, -q, -a.transpose();
  RiccatiResult out;

  Eigen::EigenSolver<Eigen::MatrixXd> es(ham, false);
  const double scale = ham.norm();
  if (es.info() != Eigen::Success ||
      es.eigenvalues().real().cwiseAbs().minCoeff() <= 1e-9 * std::max(scale, 1.0)) {
    out.imaginary_axis = true;
    return out;
  }

  const SignResult sr = matrix_sign(ham);
  if (!sr.converged) return out;
  const Eigen::MatrixXd& z = sr.sign;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  // (sign + I) [I; P] = 0 on the stable subspace.
  Eigen::MatrixXd lhs(2 * n, n);
  Eigen::MatrixXd rhs(2 * n, n);
  lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + id;
  rhs << z.topLeftCorner(n, n) + id, z.bottomLeftCorner(n, n);
  rhs = -rhs;
  const Eigen::MatrixXd p = lhs.completeOrthogonalDecomposition().solve(rhs);
  if (!p.allFinite()) return out;
  out.P = detail::symmetrize(p);
  out.solved = true;
  return out;
}

}  // namespace pdeode
