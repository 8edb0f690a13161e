#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "pdeode/expression.hpp"

namespace pdeode {

/// Scalar coefficient field on [0, 1] with its first derivative.
///
/// Constant fields carry their value so callers can take closed-form paths;
/// expression fields keep their source text for serialization.
class ScalarField {
 public:
  using Fn = std::function<double(double)>;

  ScalarField() : ScalarField(constant(0.0)) {}

  static ScalarField constant(double c) {
    ScalarField f(
        [c](double) { return c; }, [](double) { return 0.0; }, format_number(c));
    f.constant_ = c;
    return f;
  }

  static ScalarField from_expression(const Expression& e) {
    if (e.is_constant()) {
      ScalarField f = constant(e(0.0));
      f.source_ = e.source();
      return f;
    }
    return ScalarField([e](double x) { return e(x); }, [e](double x) { return e.derivative(x); },
                       e.source());
  }

  static ScalarField parse(const std::string& source) {
    return from_expression(Expression::parse(source));
  }

  static ScalarField from_functions(Fn value, Fn derivative, std::string label = "<function>") {
    return ScalarField(std::move(value), std::move(derivative), std::move(label));
  }

  [[nodiscard]] double operator()(double x) const { return value_(x); }
  [[nodiscard]] double derivative(double x) const { return derivative_(x); }
  [[nodiscard]] const std::optional<double>& constant_value() const noexcept { return constant_; }
  [[nodiscard]] bool is_constant() const noexcept { return constant_.has_value(); }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

  /// Pointwise shift f + c (keeps constness).
  [[nodiscard]] ScalarField shifted(double c) const {
    if (constant_) {
      return constant(*constant_ + c);
    }
    Fn v = value_;
    Fn d = derivative_;
    return ScalarField([v, c](double x) { return v(x) + c; }, d, "(" + source_ + ")+" + format_number(c));
  }

  /// Minimum and maximum over a uniform sample of [0, 1].
  [[nodiscard]] std::pair<double, double> sampled_range(std::size_t samples = 4097) const {
    if (constant_) return {*constant_, *constant_};
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t k = 0; k < samples; ++k) {
      const double v = value_(static_cast<double>(k) / static_cast<double>(samples - 1));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return {lo, hi};
  }

  static std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }

 private:
  ScalarField(Fn value, Fn derivative, std::string source)
      : value_(std::move(value)), derivative_(std::move(derivative)), source_(std::move(source)) {}

  Fn value_;
  Fn derivative_;
  std::optional<double> constant_;
  std::string source_;
};

}  // namespace pdeode
