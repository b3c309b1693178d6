#pragma once

#include <stdexcept>
#include <string>

namespace tikmix {

// Exception hierarchy. Each category maps to a distinct CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (dimension mismatch, empty domain, bad file).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (bad distribution parameters, unknown keys).
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Non-finite values or a diverging computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A constrained problem whose constraints cannot be met.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Statistics that cannot be formed from the available data.
class StatisticsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace tikmix
