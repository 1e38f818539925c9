#pragma once

#include <stdexcept>
#include <string>

namespace ccch {

/// Invalid user-facing parameters (bad grid size, unknown config key, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values encountered where finite data is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The periodic window is too small for the requested computation, or a
/// position fell outside it.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an API precondition (grid mismatch, time mismatch, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A measurement could not be made from the data supplied (too few tail
/// nodes, trajectory shorter than one period, ...).
class MeasurementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccch
