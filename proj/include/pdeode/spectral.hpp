#pragma once

// Eigenstructure of the Sturm-Liouville operator
//
//   A f = -(p f')' + q f   on (0, 1),
//   cos(theta1) f(0) - sin(theta1) f'(0) = 0,
//   cos(theta2) f(1) + sin(theta2) f'(1) = 0,
//
// with theta1, theta2 in [0, pi/2], together with the spectral quantities
// built on it: modal projections, the graph-norm energy sum(lambda_n c_n^2),
// L2 tails of projections and certified upper bounds of the two pointwise
// tail series used by the stability conditions.
//
// Mode indices are 1-based throughout (mode n has eigenvalue lambda(n)).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pdeode/errors.hpp"
#include "pdeode/field.hpp"
#include "pdeode/quadrature.hpp"
#include "pdeode/tridiagonal.hpp"

namespace pdeode {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

namespace detail {
inline constexpr double kAngleTol = 1e-12;
inline bool is_dirichlet_angle(double theta) { return theta <= kAngleTol; }
inline bool is_neumann_angle(double theta) { return std::abs(theta - kHalfPi) <= kAngleTol; }
inline double snap_angle(double theta) {
  if (is_dirichlet_angle(theta)) return 0.0;
  if (is_neumann_angle(theta)) return kHalfPi;
  return theta;
}
}  // namespace detail

struct CoefficientBounds {
  double p_lo = 0.0;
  double p_hi = 0.0;
  double q_hi = 0.0;
};

class SturmLiouvilleProblem {
 public:
  /// Validates the coefficient and angle invariants on a dense sample of
  /// [0, 1]. Without explicit bounds, p_lo/p_hi/q_hi are the sampled extrema.
  SturmLiouvilleProblem(ScalarField p, ScalarField q, double theta1, double theta2,
                        std::optional<CoefficientBounds> bounds = std::nullopt)
      : p_(std::move(p)), q_(std::move(q)) {
    for (double t : {theta1, theta2}) {
      if (!std::isfinite(t) || t < -detail::kAngleTol || t > kHalfPi + detail::kAngleTol)
        throw DomainError("boundary angle " + ScalarField::format_number(t) +
                          " outside [0, pi/2]");
    }
    theta1_ = detail::snap_angle(theta1);
    theta2_ = detail::snap_angle(theta2);

    const auto [pmin, pmax] = p_.sampled_range();
    const auto [qmin, qmax] = q_.sampled_range();
    if (!(pmin > 0.0)) throw DomainError("diffusion coefficient p must be positive on [0,1]");
    if (!(qmin > 0.0)) throw DomainError("reaction coefficient q must be positive on [0,1]");
    if (bounds) {
      if (!(bounds->p_lo > 0.0) || bounds->p_lo > pmin || bounds->p_hi < pmax || bounds->q_hi < qmax)
        throw DomainError("supplied coefficient bounds do not enclose the sampled coefficients");
      bounds_ = *bounds;
    } else {
      bounds_ = {pmin, pmax, qmax};
    }
  }

  [[nodiscard]] const ScalarField& p() const noexcept { return p_; }
  [[nodiscard]] const ScalarField& q() const noexcept { return q_; }
  [[nodiscard]] double theta1() const noexcept { return theta1_; }
  [[nodiscard]] double theta2() const noexcept { return theta2_; }
  [[nodiscard]] double p_lo() const noexcept { return bounds_.p_lo; }
  [[nodiscard]] double p_hi() const noexcept { return bounds_.p_hi; }
  [[nodiscard]] double q_hi() const noexcept { return bounds_.q_hi; }
  [[nodiscard]] bool constant_coefficients() const noexcept {
    return p_.is_constant() && q_.is_constant();
  }

  /// Eigenvalue enclosure pi^2 (n-1)^2 p_lo <= lambda_n <= pi^2 n^2 p_hi + q_hi.
  [[nodiscard]] double eigenvalue_lower_bound(std::size_t n) const {
    const double k = static_cast<double>(n) - 1.0;
    return kPi * kPi * k * k * bounds_.p_lo;
  }
  [[nodiscard]] double eigenvalue_upper_bound(std::size_t n) const {
    const double k = static_cast<double>(n);
    return kPi * kPi * k * k * bounds_.p_hi + bounds_.q_hi;
  }

 private:
  ScalarField p_;
  ScalarField q_;
  double theta1_ = 0.0;
  double theta2_ = 0.0;
  CoefficientBounds bounds_;
};

enum class BasisOrigin { ClosedForm, TranscendentalRoot, Discretized };

[[nodiscard]] inline const char* to_string(BasisOrigin o) {
  switch (o) {
    case BasisOrigin::ClosedForm: return "closed-form";
    case BasisOrigin::TranscendentalRoot: return "transcendental-root";
    case BasisOrigin::Discretized: return "discretized";
  }
  return "?";
}

/// phi(x) = amplitude * sin(mu x + phase), or amplitude * cos(mu x) when
/// `cosine` is set (used by the closed forms to evaluate them verbatim).
struct AnalyticMode {
  double mu = 0.0;
  double phase = 0.0;
  double amplitude = 1.0;
  bool cosine = false;

  [[nodiscard]] double value(double x) const {
    return cosine ? amplitude * std::cos(mu * x) : amplitude * std::sin(mu * x + phase);
  }
  [[nodiscard]] double slope(double x) const {
    return cosine ? -amplitude * mu * std::sin(mu * x) : amplitude * mu * std::cos(mu * x + phase);
  }
};

/// Nodal values and slopes on a uniform grid, evaluated by cubic Hermite
/// interpolation.
struct GridMode {
  std::vector<double> values;
  std::vector<double> slopes;
};

struct EigenPair {
  std::size_t index = 0;
  double lambda = 0.0;
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
};

class SpectralBasis {
 public:
  using ModeGenerator = std::function<std::pair<double, AnalyticMode>(std::size_t)>;

  SpectralBasis(SturmLiouvilleProblem problem, BasisOrigin origin, std::vector<double> eigenvalues,
                std::vector<AnalyticMode> modes, ModeGenerator generator)
      : state_(std::make_shared<State>(State{std::move(problem), origin, std::move(eigenvalues),
                                             std::move(modes), {}, 0.0, std::move(generator)})) {}

  SpectralBasis(SturmLiouvilleProblem problem, std::vector<double> eigenvalues, double grid_step,
                std::vector<GridMode> modes)
      : state_(std::make_shared<State>(State{std::move(problem), BasisOrigin::Discretized,
                                             std::move(eigenvalues), {}, std::move(modes),
                                             grid_step, {}})) {}

  [[nodiscard]] const SturmLiouvilleProblem& problem() const noexcept { return state_->problem; }
  [[nodiscard]] BasisOrigin origin() const noexcept { return state_->origin; }
  [[nodiscard]] std::size_t size() const noexcept { return state_->eigenvalues.size(); }
  [[nodiscard]] bool is_analytic() const noexcept { return state_->origin != BasisOrigin::Discretized; }

  [[nodiscard]] double lambda(std::size_t n) const { return state_->eigenvalues.at(check(n) - 1); }
  [[nodiscard]] double phi(std::size_t n, double x) const { return state_->value(check(n) - 1, x); }
  [[nodiscard]] double dphi(std::size_t n, double x) const { return state_->slope(check(n) - 1, x); }

  [[nodiscard]] EigenPair pair(std::size_t n) const {
    check(n);
    auto s = state_;
    const std::size_t i = n - 1;
    return EigenPair{n, s->eigenvalues[i], [s, i](double x) { return s->value(i, x); },
                     [s, i](double x) { return s->slope(i, x); }};
  }

  [[nodiscard]] const AnalyticMode* analytic_mode(std::size_t n) const {
    check(n);
    return is_analytic() ? &state_->analytic[n - 1] : nullptr;
  }

  /// Eigenvalue and mode for any n >= 1 (analytic bases only), including
  /// indices beyond the stored ones.
  [[nodiscard]] std::pair<double, AnalyticMode> extended_mode(std::size_t n) const {
    if (!is_analytic()) throw ContractViolation("extended_mode requires an analytic basis");
    if (n == 0) throw DomainError("mode index must be >= 1");
    if (n <= size()) return {state_->eigenvalues[n - 1], state_->analytic[n - 1]};
    return state_->generator(n);
  }

  [[nodiscard]] double grid_step() const noexcept { return state_->grid_step; }

  /// Quadrature adequate for inner products against modes 1..modes.
  ///
  /// Analytic bases use 8-point Gauss-Legendre panels, at least one panel
  /// per half-wavelength of the highest mode. Discretized bases integrate
  /// cell by cell with 4 points, which is exact for products of the
  /// piecewise-cubic eigenfunctions.
  [[nodiscard]] QuadratureRule quadrature(std::size_t modes) const {
    if (!is_analytic()) {
      const std::size_t cells = static_cast<std::size_t>(std::lround(1.0 / state_->grid_step));
      return composite_gauss_legendre(0.0, 1.0, cells, 4);
    }
    return composite_gauss_legendre(0.0, 1.0, std::max<std::size_t>(32, modes + 8), 8);
  }

 private:
  struct State {
    SturmLiouvilleProblem problem;
    BasisOrigin origin;
    std::vector<double> eigenvalues;
    std::vector<AnalyticMode> analytic;
    std::vector<GridMode> grid;
    double grid_step;
    ModeGenerator generator;

    [[nodiscard]] double value(std::size_t i, double x) const {
      if (origin != BasisOrigin::Discretized) return analytic[i].value(x);
      return hermite(grid[i], x, false);
    }
    [[nodiscard]] double slope(std::size_t i, double x) const {
      if (origin != BasisOrigin::Discretized) return analytic[i].slope(x);
      return hermite(grid[i], x, true);
    }
    [[nodiscard]] double hermite(const GridMode& m, double x, bool derivative) const {
      const std::size_t cells = m.values.size() - 1;
      const double h = grid_step;
      x = std::clamp(x, 0.0, 1.0);
      std::size_t k = static_cast<std::size_t>(x / h);
      if (k >= cells) k = cells - 1;
      const double t = (x - static_cast<double>(k) * h) / h;
      const double f0 = m.values[k], f1 = m.values[k + 1];
      const double d0 = m.slopes[k] * h, d1 = m.slopes[k + 1] * h;
      if (!derivative) {
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * f1 +
               (t3 - t2) * d1;
      }
      const double t2 = t * t;
      return ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * d0 + (-6 * t2 + 6 * t) * f1 +
              (3 * t2 - 2 * t) * d1) /
             h;
    }
  };

  std::size_t check(std::size_t n) const {
    if (n == 0 || n > size())
      throw DomainError("mode index " + std::to_string(n) + " outside stored range 1.." +
                        std::to_string(size()));
    return n;
  }

  std::shared_ptr<const State> state_;
};

namespace detail {

/// Phase of sin(mu x + phase) satisfying the Robin condition with angle
/// theta at x = 0 (and, mirrored, at x = 1). Limit mu -> 0+ for theta = pi/2.
inline double robin_phase(double mu, double theta) {
  if (theta == kHalfPi) return kHalfPi;
  if (theta == 0.0) return 0.0;
  return std::atan2(mu * std::sin(theta), std::cos(theta));
}

inline double sin_squared_integral(double mu, double phase) {
  if (mu >= 1e-3) {
    return 0.5 - (std::sin(2.0 * mu + 2.0 * phase) - std::sin(2.0 * phase)) / (4.0 * mu);
  }
  const QuadratureRule r = composite_gauss_legendre(0.0, 1.0, 1, 16);
  return r.integrate([&](double x) {
    const double s = std::sin(mu * x + phase);
    return s * s;
  });
}

/// Mode n of the constant-coefficient Robin problem. Writing lambda = p mu^2 + q
/// and phi = sin(mu x + g1(mu)), the right boundary condition is
/// sin(mu + g1(mu) + g2(mu)) = 0. The phase sum is increasing in mu, so the
/// n-th eigenvalue is the unique root of mu + g1 + g2 = n pi, which lies in
/// [(n-1) pi, n pi]: the eigenvalue enclosure applied to A - q.
inline std::pair<double, AnalyticMode> robin_mode(double p, double q, double theta1, double theta2,
                                                  std::size_t n) {
  const double target = kPi * static_cast<double>(n);
  auto g = [&](double mu) { return mu + robin_phase(mu, theta1) + robin_phase(mu, theta2) - target; };
  double lo = kPi * (static_cast<double>(n) - 1.0);
  double hi = target;
  double glo = g(lo);
  double ghi = g(hi);
  const double slack = 1e-12 * std::max(1.0, target);
  if (glo > slack || ghi < -slack) throw BracketError(n, "root not bracketed by the eigenvalue enclosure");
  double mu = 0.0;
  if (std::abs(glo) <= 1e-15 * std::max(1.0, target)) {
    mu = lo;
  } else if (std::abs(ghi) <= 1e-15 * std::max(1.0, target)) {
    mu = hi;
  } else {
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (g(mid) < 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    mu = 0.5 * (lo + hi);
  }
  AnalyticMode m;
  m.mu = mu;
  m.phase = robin_phase(mu, theta1);
  m.amplitude = 1.0 / std::sqrt(sin_squared_integral(mu, m.phase));
  return {p * mu * mu + q, m};
}

/// Closed-form mode for the four separable angle pairs; nullopt otherwise.
inline std::optional<std::pair<double, AnalyticMode>> closed_form_mode(double p, double q, double theta1,
                                                                       double theta2, std::size_t n) {
  const double k = static_cast<double>(n);
  const double sqrt2 = std::numbers::sqrt2;
  AnalyticMode m;
  if (theta1 == kHalfPi && theta2 == 0.0) {
    m = {(k - 0.5) * kPi, 0.0, sqrt2, true};
  } else if (theta1 == 0.0 && theta2 == kHalfPi) {
    m = {(k - 0.5) * kPi, 0.0, sqrt2, false};
  } else if (theta1 == 0.0 && theta2 == 0.0) {
    m = {k * kPi, 0.0, sqrt2, false};
  } else if (theta1 == kHalfPi && theta2 == kHalfPi) {
    m = (n == 1) ? AnalyticMode{0.0, 0.0, 1.0, true} : AnalyticMode{(k - 1.0) * kPi, 0.0, sqrt2, true};
  } else {
    return std::nullopt;
  }
  return std::pair{p * m.mu * m.mu + q, m};
}

inline void require_constant(const SturmLiouvilleProblem& pb, const char* who) {
  if (!pb.constant_coefficients())
    throw DomainError(std::string(who) + " requires constant coefficients p and q");
}

}  // namespace detail

/// Exact eigenpairs for the separable angle pairs (pi/2,0), (0,pi/2), (0,0)
/// and (pi/2,pi/2) with constant p, q.
[[nodiscard]] inline SpectralBasis closed_form_basis(double p, double q, double theta1, double theta2,
                                                     std::size_t n_max) {
  if (!(p > 0.0) || !(q > 0.0)) throw DomainError("closed_form_basis: p and q must be positive");
  if (n_max == 0) throw DomainError("closed_form_basis: n_max must be >= 1");
  SturmLiouvilleProblem pb(ScalarField::constant(p), ScalarField::constant(q), theta1, theta2);
  const double t1 = pb.theta1();
  const double t2 = pb.theta2();
  if (!detail::closed_form_mode(p, q, t1, t2, 1))
    throw UnsupportedCase("closed_form_basis: no closed form for this angle pair, use robin_basis");
  std::vector<double> lambdas;
  std::vector<AnalyticMode> modes;
  for (std::size_t n = 1; n <= n_max; ++n) {
    auto [l, m] = *detail::closed_form_mode(p, q, t1, t2, n);
    lambdas.push_back(l);
    modes.push_back(m);
  }
  auto gen = [p, q, t1, t2](std::size_t n) { return *detail::closed_form_mode(p, q, t1, t2, n); };
  return SpectralBasis(std::move(pb), BasisOrigin::ClosedForm, std::move(lambdas), std::move(modes), gen);
}

/// General constant-coefficient Robin problem via root finding on the
/// boundary condition at x = 1.
[[nodiscard]] inline SpectralBasis robin_basis(const SturmLiouvilleProblem& problem, std::size_t n_max) {
  detail::require_constant(problem, "robin_basis");
  if (n_max == 0) throw DomainError("robin_basis: n_max must be >= 1");
  const double p = *problem.p().constant_value();
  const double q = *problem.q().constant_value();
  const double t1 = problem.theta1();
  const double t2 = problem.theta2();
  std::vector<double> lambdas;
  std::vector<AnalyticMode> modes;
  for (std::size_t n = 1; n <= n_max; ++n) {
    auto [l, m] = detail::robin_mode(p, q, t1, t2, n);
    if (l < problem.eigenvalue_lower_bound(n) || l > problem.eigenvalue_upper_bound(n))
      throw BracketError(n, "refined root violates the eigenvalue enclosure");
    if (!lambdas.empty() && !(l > lambdas.back()))
      throw BracketError(n, "eigenvalues not strictly increasing");
    lambdas.push_back(l);
    modes.push_back(m);
  }
  auto gen = [p, q, t1, t2](std::size_t n) { return detail::robin_mode(p, q, t1, t2, n); };
  return SpectralBasis(problem, BasisOrigin::TranscendentalRoot, std::move(lambdas), std::move(modes), gen);
}

namespace detail {

struct FdSolution {
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> nodal;  // M+1 nodal values per mode, unit discrete L2 norm
};

/// Self-adjoint second-order finite differences on the uniform grid x_j = j/M.
/// Robin ends use the half-cell (ghost-point) closure, Dirichlet ends are
/// eliminated. Solved as the symmetric pencil K f = lambda W f with the
/// trapezoidal mass W, reduced to W^{-1/2} K W^{-1/2}.
inline FdSolution fd_eigen(const SturmLiouvilleProblem& pb, std::size_t cells, std::size_t count) {
  const double h = 1.0 / static_cast<double>(cells);
  const bool robin_left = !is_dirichlet_angle(pb.theta1());
  const bool robin_right = !is_dirichlet_angle(pb.theta2());
  const std::size_t first = robin_left ? 0 : 1;
  const std::size_t last = robin_right ? cells : cells - 1;
  const std::size_t m = last - first + 1;

  std::vector<double> p_half(cells);
  for (std::size_t j = 0; j < cells; ++j) p_half[j] = pb.p()((static_cast<double>(j) + 0.5) * h);

  std::vector<double> kdiag(m), koff(m > 0 ? m - 1 : 0), mass(m);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t j = first + r;
    const double x = static_cast<double>(j) * h;
    if (j == 0) {
      const double cot1 = std::cos(pb.theta1()) / std::sin(pb.theta1());
      kdiag[r] = p_half[0] / h + pb.p()(0.0) * cot1 + 0.5 * h * pb.q()(0.0);
      mass[r] = 0.5 * h;
    } else if (j == cells) {
      const double cot2 = std::cos(pb.theta2()) / std::sin(pb.theta2());
      kdiag[r] = p_half[cells - 1] / h + pb.p()(1.0) * cot2 + 0.5 * h * pb.q()(1.0);
      mass[r] = 0.5 * h;
    } else {
      kdiag[r] = (p_half[j - 1] + p_half[j]) / h + h * pb.q()(x);
      mass[r] = h;
    }
    if (r + 1 < m) koff[r] = -p_half[j] / h;
  }

  SymmetricTridiagonal t;
  t.diag.resize(m);
  t.offdiag.resize(m > 0 ? m - 1 : 0);
  for (std::size_t r = 0; r < m; ++r) t.diag[r] = kdiag[r] / mass[r];
  for (std::size_t r = 0; r + 1 < m; ++r) t.offdiag[r] = koff[r] / std::sqrt(mass[r] * mass[r + 1]);

  TridiagonalEigen eig = lowest_eigenpairs(t, count);
  FdSolution out;
  out.eigenvalues = eig.values;
  out.nodal.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> f(cells + 1, 0.0);
    for (std::size_t r = 0; r < m; ++r) f[first + r] = eig.vectors[k][r] / std::sqrt(mass[r]);
    out.nodal[k] = std::move(f);
  }
  return out;
}

/// Nodal slopes: exact Robin closure at Robin ends, one-sided second-order
/// differences at Dirichlet ends, centered differences inside.
inline std::vector<double> nodal_slopes(const SturmLiouvilleProblem& pb, const std::vector<double>& f,
                                        double h) {
  const std::size_t cells = f.size() - 1;
  std::vector<double> s(f.size());
  for (std::size_t j = 1; j < cells; ++j) s[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
  if (is_dirichlet_angle(pb.theta1())) {
    s[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  } else {
    s[0] = std::cos(pb.theta1()) / std::sin(pb.theta1()) * f[0];
  }
  if (is_dirichlet_angle(pb.theta2())) {
    s[cells] = (3.0 * f[cells] - 4.0 * f[cells - 1] + f[cells - 2]) / (2.0 * h);
  } else {
    s[cells] = -std::cos(pb.theta2()) / std::sin(pb.theta2()) * f[cells];
  }
  return s;
}

}  // namespace detail

/// Finite-difference eigenpairs for general (variable) coefficients.
///
/// Eigenvalues are Richardson-extrapolated from grids of `grid_size` and
/// `grid_size / 2` cells. Eigenfunctions come from the fine grid, are
/// interpolated by cubic Hermite pieces and then symmetrically
/// re-orthonormalized in L2 (a linear recombination, so the homogeneous
/// boundary conditions are preserved).
[[nodiscard]] inline SpectralBasis discretized_basis(const SturmLiouvilleProblem& problem,
                                                     std::size_t n_max, std::size_t grid_size) {
  if (n_max == 0) throw DomainError("discretized_basis: n_max must be >= 1");
  if (grid_size < 16 * n_max) throw DomainError("discretized_basis: grid_size must be >= 16 * n_max");
  if (grid_size % 2 != 0) ++grid_size;
  const double h = 1.0 / static_cast<double>(grid_size);

  const detail::FdSolution fine = detail::fd_eigen(problem, grid_size, n_max);
  const detail::FdSolution coarse = detail::fd_eigen(problem, grid_size / 2, n_max);

  std::vector<double> lambdas(n_max);
  for (std::size_t k = 0; k < n_max; ++k) {
    lambdas[k] = (4.0 * fine.eigenvalues[k] - coarse.eigenvalues[k]) / 3.0;
    const std::size_t n = k + 1;
    const double tol = 1e-6 * std::abs(lambdas[k]) +
                       std::abs(fine.eigenvalues[k] - coarse.eigenvalues[k]);
    if (lambdas[k] < problem.eigenvalue_lower_bound(n) - tol ||
        lambdas[k] > problem.eigenvalue_upper_bound(n) + tol)
      throw BracketError(n, "discretized eigenvalue violates the enclosure; grid too coarse");
    if (k > 0 && !(lambdas[k] > lambdas[k - 1])) throw BracketError(n, "eigenvalues not increasing; grid too coarse");
  }

  std::vector<GridMode> modes(n_max);
  for (std::size_t k = 0; k < n_max; ++k) {
    GridMode g;
    g.values = fine.nodal[k];
    g.slopes = detail::nodal_slopes(problem, g.values, h);
    // Sign convention shared with the analytic modes:
    // phi(0) sin(theta1) + phi'(0) cos(theta1) > 0.
    const double s = g.values[0] * std::sin(problem.theta1()) + g.slopes[0] * std::cos(problem.theta1());
    if (s < 0.0) {
      for (double& v : g.values) v = -v;
      for (double& v : g.slopes) v = -v;
    }
    modes[k] = std::move(g);
  }

  // Gram matrix of the interpolants (exact: cubic x cubic per cell).
  SpectralBasis provisional(problem, lambdas, h, modes);
  const QuadratureRule rule = provisional.quadrature(n_max);
  Eigen::MatrixXd values(rule.size(), n_max);
  for (std::size_t k = 0; k < n_max; ++k)
    for (std::size_t i = 0; i < rule.size(); ++i) values(i, k) = provisional.phi(k + 1, rule.nodes[i]);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), rule.size());
  const Eigen::MatrixXd gram = values.transpose() * w.asDiagonal() * values;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::MatrixXd inv_sqrt =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();

  std::vector<GridMode> ortho(n_max);
  for (std::size_t k = 0; k < n_max; ++k) {
    ortho[k].values.assign(grid_size + 1, 0.0);
    ortho[k].slopes.assign(grid_size + 1, 0.0);
    for (std::size_t j = 0; j < n_max; ++j) {
      const double c = inv_sqrt(j, k);
      for (std::size_t i = 0; i <= grid_size; ++i) {
        ortho[k].values[i] += c * modes[j].values[i];
        ortho[k].slopes[i] += c * modes[j].slopes[i];
      }
    }
  }
  return SpectralBasis(problem, std::move(lambdas), h, std::move(ortho));
}

/// Modal coefficients (<f, phi_1>, ..., <f, phi_n>).
template <class F>
[[nodiscard]] Eigen::VectorXd project(const SpectralBasis& basis, F&& f, std::size_t n) {
  if (n > basis.size())
    throw DomainError("project: requested " + std::to_string(n) + " modes, basis holds " +
                      std::to_string(basis.size()));
  const QuadratureRule rule = basis.quadrature(n);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double wf = rule.weights[k] * f(rule.nodes[k]);
    if (wf == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i)] += wf * basis.phi(i + 1, rule.nodes[k]);
  }
  return out;
}

/// sum_n lambda_n c_n^2, the squared graph norm of A^{1/2} for the modal
/// combination sum_n c_n phi_n.
[[nodiscard]] inline double h1_energy(const SpectralBasis& basis, const Eigen::VectorXd& coeffs) {
  if (static_cast<std::size_t>(coeffs.size()) > basis.size())
    throw DomainError("h1_energy: more coefficients than stored modes");
  double s = 0.0;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    s += basis.lambda(static_cast<std::size_t>(i) + 1) * coeffs[i] * coeffs[i];
  return s;
}

struct TailNorm {
  double value = 0.0;         // ||P_N f||^2, clamped at 0
  double clamped_by = 0.0;    // magnitude of a negative round-off residue, 0 if none
};

/// ||P_N f||^2_{L2} = ||f||^2 - sum_{i<=N} <f, phi_i>^2.
template <class F>
[[nodiscard]] TailNorm tail_norm(const SpectralBasis& basis, F&& f, std::size_t n) {
  const QuadratureRule rule = basis.quadrature(n);
  const double total = rule.integrate([&](double x) {
    const double v = f(x);
    return v * v;
  });
  const Eigen::VectorXd c = project(basis, f, n);
  const double residue = total - c.squaredNorm();
  TailNorm out;
  if (residue < 0.0) {
    out.clamped_by = -residue;
  } else {
    out.value = residue;
  }
  return out;
}

enum class TailMethod { PrintedClosedForm, PartialSumPlusRemainder };

struct TailBound {
  double value = 0.0;
  TailMethod method = TailMethod::PrintedClosedForm;
  double partial_sum = 0.0;
  double remainder = 0.0;
  std::size_t cutoff = 0;  // last index summed explicitly
};

/// Uniform sup bounds for modes beyond the explicitly summed ones, needed
/// for discretized bases: phi_sup >= |phi_n(zeta)| and
/// dphi_sup >= |phi_n'(zeta)| / sqrt(lambda_n).
struct TailSupBounds {
  std::optional<double> phi_sup;
  std::optional<double> dphi_sup;
};

inline constexpr std::size_t kTailCutoff = 10000;

namespace detail {

inline bool printed_tail_formula_applies(const SpectralBasis& b) {
  if (b.origin() != BasisOrigin::ClosedForm) return false;
  const double t1 = b.problem().theta1();
  const double t2 = b.problem().theta2();
  return (t1 == kHalfPi && t2 == 0.0) || (t1 == 0.0 && t2 == kHalfPi);
}

// Squared sup of |phi_i| over all i > k for analytic modes: amplitude^2 =
// 1 / int sin^2 <= 2 mu / (mu - 1), decreasing in mu, and mu_i >= k pi.
inline double analytic_sup_squared(const SpectralBasis& b, std::size_t k) {
  if (b.origin() == BasisOrigin::ClosedForm) return 2.0;
  const double mu = kPi * static_cast<double>(k);
  return 2.0 * mu / (mu - 1.0);
}

}  // namespace detail

/// Certified upper bound of sum_{i > n} phi_i(zeta)^2 / lambda_i.
[[nodiscard]] inline TailBound tail_m1(const SpectralBasis& basis, std::size_t n, double zeta,
                                       const TailSupBounds& sup = {}) {
  if (n == 0) throw DomainError("tail_m1: truncation order must be >= 1");
  const auto& pb = basis.problem();
  TailBound out;
  if (detail::printed_tail_formula_applies(basis)) {
    const double p = *pb.p().constant_value();
    out.value = 2.0 / (p * kPi * kPi * (static_cast<double>(n) - 0.5));
    out.method = TailMethod::PrintedClosedForm;
    return out;
  }
  out.method = TailMethod::PartialSumPlusRemainder;
  double sup2 = 0.0;
  std::size_t cutoff = 0;
  if (basis.is_analytic()) {
    cutoff = std::max(n, kTailCutoff);
    for (std::size_t i = n + 1; i <= cutoff; ++i) {
      const auto [l, m] = basis.extended_mode(i);
      const double v = m.value(zeta);
      out.partial_sum += v * v / l;
    }
    sup2 = detail::analytic_sup_squared(basis, cutoff);
  } else {
    if (!sup.phi_sup)
      throw TailBoundUnavailable(
          "tail_m1: variable-coefficient basis needs a user-supplied sup bound on |phi_n(zeta)|");
    cutoff = std::max(n, basis.size());
    for (std::size_t i = n + 1; i <= basis.size(); ++i) {
      const double v = basis.phi(i, zeta);
      out.partial_sum += v * v / basis.lambda(i);
    }
    sup2 = *sup.phi_sup * *sup.phi_sup;
  }
  // sum_{i > K} 1/lambda_i <= sum_{j >= K} 1/(pi^2 p_lo j^2) <= 1/(pi^2 p_lo (K-1)).
  const double k = static_cast<double>(std::max<std::size_t>(cutoff, 2));
  out.remainder = sup2 / (kPi * kPi * pb.p_lo() * (k - 1.0));
  out.cutoff = cutoff;
  out.value = out.partial_sum + out.remainder;
  return out;
}

/// Certified upper bound of sum_{i > n} phi_i'(zeta)^2 / lambda_i^{3/2 + eps}.
[[nodiscard]] inline TailBound tail_m2(const SpectralBasis& basis, std::size_t n, double zeta,
                                       double epsilon, const TailSupBounds& sup = {}) {
  if (n == 0) throw DomainError("tail_m2: truncation order must be >= 1");
  if (!(epsilon > 0.0) || epsilon > 0.5) throw DomainError("tail_m2: epsilon must lie in (0, 1/2]");
  const auto& pb = basis.problem();
  TailBound out;
  const double expo = 1.5 + epsilon;
  if (detail::printed_tail_formula_applies(basis)) {
    const double p = *pb.p().constant_value();
    out.value = 1.0 / (epsilon * std::pow(p, expo) * std::pow(kPi, 1.0 + 2.0 * epsilon) *
                       std::pow(static_cast<double>(n) - 0.5, 2.0 * epsilon));
    out.method = TailMethod::PrintedClosedForm;
    return out;
  }
  out.method = TailMethod::PartialSumPlusRemainder;
  double dsup2 = 0.0;  // bound on phi_i'(zeta)^2 / lambda_i beyond the cutoff
  std::size_t cutoff = 0;
  if (basis.is_analytic()) {
    cutoff = std::max(n, kTailCutoff);
    for (std::size_t i = n + 1; i <= cutoff; ++i) {
      const auto [l, m] = basis.extended_mode(i);
      const double d = m.slope(zeta);
      out.partial_sum += d * d / std::pow(l, expo);
    }
    // |phi'|^2 <= amplitude^2 mu^2 and mu^2 = (lambda - q)/p <= lambda / p.
    dsup2 = detail::analytic_sup_squared(basis, cutoff) / pb.p_lo();
  } else {
    if (!sup.dphi_sup)
      throw TailBoundUnavailable(
          "tail_m2: variable-coefficient basis needs a user-supplied sup bound on "
          "|phi_n'(zeta)|/sqrt(lambda_n)");
    cutoff = std::max(n, basis.size());
    for (std::size_t i = n + 1; i <= basis.size(); ++i) {
      const double d = basis.dphi(i, zeta);
      out.partial_sum += d * d / std::pow(basis.lambda(i), expo);
    }
    dsup2 = *sup.dphi_sup * *sup.dphi_sup;
  }
  // sum_{i > K} lambda_i^{-1/2-eps} <= (pi^2 p_lo)^{-1/2-eps} sum_{j >= K} j^{-1-2 eps}
  //                                 <= (pi^2 p_lo)^{-1/2-eps} (K-1)^{-2 eps} / (2 eps).
  const double k = static_cast<double>(std::max<std::size_t>(cutoff, 2));
  out.remainder = dsup2 * std::pow(kPi * kPi * pb.p_lo(), -(0.5 + epsilon)) *
                  std::pow(k - 1.0, -2.0 * epsilon) / (2.0 * epsilon);
  out.cutoff = cutoff;
  out.value = out.partial_sum + out.remainder;
  return out;
}

}  // namespace pdeode
