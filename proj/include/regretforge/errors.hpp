#pragma once

#include <stdexcept>
#include <string>

namespace regretforge {

// Broken caller contract (bad sizes, invalid ids, malformed profiles).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent configuration; carries the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Numeric domain problems (log of a negative value, degenerate marginals).
class NumericDomainError : public std::domain_error {
 public:
  explicit NumericDomainError(const std::string& what) : std::domain_error(what) {}
};

// Unreadable, truncated or version-mismatched checkpoint payload.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when the marginalizability bound does not certify.
class CertificationFailure : public std::runtime_error {
 public:
  CertificationFailure(const std::string& what, double nash_gap, double cce_gap, double efm,
                       double slack)
      : std::runtime_error(what), nash_gap(nash_gap), cce_gap(cce_gap), efm(efm), slack(slack) {}
  double nash_gap;
  double cce_gap;
  double efm;
  double slack;
};

}  // namespace regretforge
