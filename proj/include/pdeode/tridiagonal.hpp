#pragma once

// Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
// bisection and inverse iteration. Cost is O(n) per bisection step and per
// inverse-iteration solve, which keeps fine grids (n ~ 10^4) cheap when only
// a few dozen eigenpairs are needed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "pdeode/errors.hpp"

namespace pdeode {

struct SymmetricTridiagonal {
  std::vector<double> diag;     // size n
  std::vector<double> offdiag;  // size n-1

  [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }
};

namespace detail {

/// Number of eigenvalues below x (LDL^T inertia count).
inline std::size_t sturm_count(const SymmetricTridiagonal& t, double x) {
  const std::size_t n = t.size();
  std::size_t count = 0;
  const double tiny = std::numeric_limits<double>::min() * 4.0;
  // Zero pivots are nudged to -tiny before counting, as in LAPACK dstebz.
  auto pivot = [&](double d) {
    if (std::abs(d) < tiny) d = -tiny;
    if (d < 0.0) ++count;
    return d;
  };
  double d = pivot(t.diag[0] - x);
  for (std::size_t i = 1; i < n; ++i) d = pivot(t.diag[i] - x - t.offdiag[i - 1] * t.offdiag[i - 1] / d);
  return count;
}

/// Solve (T - shift I) y = rhs with partial pivoting (LAPACK gttrf/gttrs style).
inline std::vector<double> shifted_solve(const SymmetricTridiagonal& t, double shift,
                                         std::vector<double> rhs) {
  const std::size_t n = t.size();
  std::vector<double> dl(t.offdiag.begin(), t.offdiag.end());
  std::vector<double> d(n);
  std::vector<double> du(t.offdiag.begin(), t.offdiag.end());
  std::vector<double> du2(n > 2 ? n - 2 : 0, 0.0);
  std::vector<char> swapped(n, 0);
  for (std::size_t i = 0; i < n; ++i) d[i] = t.diag[i] - shift;
  const double eps = std::numeric_limits<double>::epsilon();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(t.diag[i]) + (i + 1 < n ? 2.0 * std::abs(t.offdiag[i]) : 0.0));
  const double floor_pivot = eps * std::max(scale, 1.0);

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (std::abs(d[i]) < floor_pivot) d[i] = floor_pivot;
      const double f = dl[i] / d[i];
      dl[i] = f;
      d[i + 1] -= f * du[i];
    } else {
      const double f = d[i] / dl[i];
      d[i] = dl[i];
      dl[i] = f;
      const double tmp = du[i];
      du[i] = d[i + 1];
      d[i + 1] = tmp - f * d[i + 1];
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -f * du[i + 1];
      }
      swapped[i] = 1;
    }
  }
  if (std::abs(d[n - 1]) < floor_pivot) d[n - 1] = floor_pivot;

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped[i]) {
      const double tmp = rhs[i];
      rhs[i] = rhs[i + 1];
      rhs[i + 1] = tmp - dl[i] * rhs[i + 1];
    } else {
      rhs[i + 1] -= dl[i] * rhs[i];
    }
  }
  rhs[n - 1] /= d[n - 1];
  if (n > 1) rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
  for (std::size_t k = n >= 2 ? n - 2 : 0; k-- > 0;) {
    rhs[k] = (rhs[k] - du[k] * rhs[k + 1] - du2[k] * rhs[k + 2]) / d[k];
  }
  return rhs;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

struct TridiagonalEigen {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // unit 2-norm, one per value
};

/// The `count` smallest eigenvalues and their eigenvectors.
[[nodiscard]] inline TridiagonalEigen lowest_eigenpairs(const SymmetricTridiagonal& t,
                                                         std::size_t count) {
  const std::size_t n = t.size();
  if (n == 0 || count == 0 || count > n) throw DomainError("lowest_eigenpairs: invalid count");
  if (t.offdiag.size() + 1 != n) throw DomainError("lowest_eigenpairs: inconsistent sizes");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(t.offdiag[i - 1]) : 0.0) + (i + 1 < n ? std::abs(t.offdiag[i]) : 0.0);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  const double span_abs = std::max(std::abs(lo), std::abs(hi));

  TridiagonalEigen out;
  out.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    double a = lo;
    double b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (detail::sturm_count(t, mid) > k) {
        b = mid;
      } else {
        a = mid;
      }
      if (b - a <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a) + std::abs(b), 1e-300 + 1e-16 * span_abs))
        break;
    }
    out.values[k] = 0.5 * (a + b);
  }

  out.vectors.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3 * k);
    const double shift = out.values[k];
    for (int it = 0; it < 4; ++it) {
      v = detail::shifted_solve(t, shift, std::move(v));
      // Keep clustered vectors apart (eigenvalues here are simple, so this
      // only removes round-off leakage).
      for (std::size_t j = 0; j < k; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += v[i] * out.vectors[j][i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * out.vectors[j][i];
      }
      const double nv = detail::norm2(v);
      for (double& x : v) x /= nv;
    }
    out.vectors[k] = std::move(v);
  }
  return out;
}

}  // namespace pdeode
