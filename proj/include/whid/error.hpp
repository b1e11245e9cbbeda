#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace whid {

/// Invalid argument or violated precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A least-squares design that is numerically rank deficient.
/// Carries the (column-scaled) condition estimate, +inf for underdetermined systems.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Undefined ratio or projection: zero reference signal, zero filter, etc.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The band-limited pilot has no significant energy inside the passband of r.
class EmptyBandError : public DegenerateError {
 public:
  using DegenerateError::DegenerateError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace whid
