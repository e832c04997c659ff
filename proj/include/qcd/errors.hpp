#pragma once

#include <stdexcept>
#include <string>

namespace qcd {

/// Invalid argument to a constructor or operation (bad shape parameter,
/// alpha outside (0,1), window out of range, ...). Maps to CLI exit 1.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad user configuration that is well-formed but inconsistent
/// (e.g. mean-threshold not above the pre-change mean). Maps to CLI exit 1.
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Value outside the mathematical domain of an operation
/// (observation outside [0,1], Bessel argument <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Exact likelihood-ratio increment requested where p0(x) = 0.
class SupportViolationError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Not enough observations to estimate what was asked for.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (CSV structure, non-finite values,
/// empty series). Carries no location; CSV parse errors format the line
/// number into the message.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed to converge or left its validated range
/// (bracket expansion past the cap, quadrature breakdown).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// tilt requested with eta <= mu0: the optimal tilt is no tilt at all.
class NoTiltError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// eta at or above the essential supremum of P0: no tilt can reach it.
class InfeasibleError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// alpha too large for the refined-threshold equation to have a root > 1.
/// The message points at the approx fallback.
class AlphaTooLargeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// A Monte Carlo estimate could not be formed (e.g. every trial censored).
class EstimationFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qcd
