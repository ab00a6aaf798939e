#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rebal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter record violates one or more constraints. Every violated
/// constraint is listed, not only the first one encountered.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class PoleError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Series evaluation requested outside its supported argument range.
class RangeError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Slope field evaluated too close to a singular endpoint y in {0, 1}.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A sum cancelled too many significant digits to be trusted.
class LossOfSignificance : public Error {
 public:
  LossOfSignificance(const std::string& what, double digits_lost)
      : Error(what), digits_lost_(digits_lost) {}

  double digits_lost() const noexcept { return digits_lost_; }

 private:
  double digits_lost_;
};

/// The shooting map has the same sign at both ends of the welfare bracket.
class NoMatchError : public Error {
 public:
  NoMatchError(const std::string& what, int sign_low, int sign_high)
      : Error(what), sign_low_(sign_low), sign_high_(sign_high) {}

  int sign_low() const noexcept { return sign_low_; }
  int sign_high() const noexcept { return sign_high_; }

 private:
  int sign_low_;
  int sign_high_;
};

class NoRootError : public Error {
 public:
  NoRootError(const std::string& what, std::vector<std::pair<double, double>> trace)
      : Error(what), trace_(std::move(trace)) {}

  /// Sampled (z, residual) pairs of the failed scan.
  const std::vector<std::pair<double, double>>& trace() const noexcept { return trace_; }

 private:
  std::vector<std::pair<double, double>> trace_;
};

/// Integrator or evaluator failure that is not a modelled event.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace rebal
