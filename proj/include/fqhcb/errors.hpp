#pragma once

#include <stdexcept>
#include <string>

namespace fqhcb {

/// Input outside the mathematical domain of an operation (e.g. q >= 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A configured numerical guard refused the evaluation (t too large or too
/// small, truncation window overflow, ...).
class GuardViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent model or state data (unknown sector, inadmissible pair).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fqhcb
