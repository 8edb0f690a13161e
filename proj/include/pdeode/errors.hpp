#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdeode {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (non-positive
/// coefficient, angle outside [0, pi/2], dimension mismatch, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A requested closed form does not exist for the given parameters.
class UnsupportedCase : public Error {
 public:
  using Error::Error;
};

/// Eigenvalue bracketing or bracket validation failed for a given mode.
class BracketError : public Error {
 public:
  BracketError(std::size_t index, const std::string& what)
      : Error("mode " + std::to_string(index) + ": " + what), index_(index) {}
  [[nodiscard]] std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A tail series cannot be certified without extra information.
class TailBoundUnavailable : public Error {
 public:
  using Error::Error;
};

/// Operation called on an object that does not satisfy its contract
/// (e.g. a Neumann-only quantity requested from a Dirichlet model).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// No certificate satisfies the stability conditions on the searched set.
/// This never means the system is unstable: the conditions are sufficient only.
class CertificateNotFound : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Simulated state left the finite range.
class DivergenceError : public Error {
 public:
  DivergenceError(double time, const std::string& what) : Error(what), time_(time) {}
  [[nodiscard]] double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace pdeode
