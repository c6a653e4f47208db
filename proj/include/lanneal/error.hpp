#pragma once

#include <stdexcept>
#include <string>

namespace lanneal {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  ok = 0,
  config_error = 2,
  assumption_violation = 3,
  numerical_failure = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual ExitCode exit_code() const noexcept = 0;
};

/// Invalid input: bad configuration, dimension mismatch, empty grid, etc.
class ConfigError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
};

/// A structural assumption of the method does not hold for the given input.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::assumption_violation; }
};

/// The numerics broke down: CFL violation, unresolved grid, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::numerical_failure; }
};

}  // namespace lanneal
