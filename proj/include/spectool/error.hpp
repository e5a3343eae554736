#pragma once

#include <stdexcept>
#include <string>

namespace spectool {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kUsage = 2,
  kNumeric = 3,
  kInvariant = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const { return ExitCode::kNumeric; }
};

/// Malformed or out-of-contract input (shapes, NaNs, parameter ranges).
class ValidationError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kUsage; }
};

/// Bad command-line usage or configuration file content.
class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kUsage; }
};

/// Input is well formed but geometrically degenerate (e.g. coincident points).
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed (non-convergence, NaN objective).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A formula was evaluated outside its domain of definition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The object is in the wrong state for the request (e.g. no eigenvectors).
class StateError : public Error {
 public:
  using Error::Error;
};

/// A checked invariant failed at run time (e.g. a stability bound exceeded).
class InvariantViolation : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kInvariant; }
};

}  // namespace spectool
