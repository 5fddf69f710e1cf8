#pragma once

#include <stdexcept>
#include <string>

namespace servingbench {

// Invalid numeric parameter (non-positive rate, shape, bandwidth, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Not enough samples / lines / records for the requested computation.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration: bad flags, invalid plans, unknown profile names.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runtime failure of a service component (bind failure, restart exhaustion).
class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace servingbench
