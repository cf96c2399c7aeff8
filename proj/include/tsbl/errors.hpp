#pragma once

#include <stdexcept>
#include <string>

namespace tsbl {

// Error taxonomy. The CLI maps these onto exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite profile evaluation; carries the offending coordinate.
struct EvaluationError : std::runtime_error {
  EvaluationError(const std::string& what, double z_)
      : std::runtime_error(what + " at z=" + std::to_string(z_)), z(z_) {}
  double z;
};

}  // namespace tsbl
