#pragma once

#include <stdexcept>
#include <string>

namespace nettomo {

// Exception hierarchy. The CLI maps each family onto a stable exit code:
// ConfigError -> 2, IoError -> 1, ComputationError (and subclasses) -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration, unknown keys, or a scheme that does not fit its topology.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a precondition (dimension mismatch, empty input, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ComputationError : public Error {
 public:
  using Error::Error;
};

/// Observations that no nonnegative traffic can produce.
class InfeasibleError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

/// Exact enumeration would exceed its configured work budget.
class BudgetError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

}  // namespace nettomo
