#pragma once

#include <stdexcept>
#include <string>

namespace pas {

/// Error categories. Each maps to a process exit code in the command-line tool.
enum class ErrorKind {
  Usage = 2,
  Input = 3,
  ModelState = 4,
  Numeric = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept {
    return kind_;
  }

  [[nodiscard]] int exitCode() const noexcept {
    return static_cast<int>(kind_);
  }

 private:
  ErrorKind kind_;
};

/// Malformed configuration: bad hyperparameters, unknown keys, invalid enum values.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::Usage, message) {}
};

/// Input data rejected: wrong dimensions, unparsable files, invalid values.
class InputError : public Error {
 public:
  explicit InputError(const std::string& message) : Error(ErrorKind::Input, message) {}
};

/// A model was used before being trained or loaded, or a checkpoint does not match.
class ModelStateError : public Error {
 public:
  explicit ModelStateError(const std::string& message) : Error(ErrorKind::ModelState, message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message) : Error(ErrorKind::Numeric, message) {}
};

/// 6D rotation whose columns are zero or parallel.
class DegenerateRotationError : public NumericError {
 public:
  explicit DegenerateRotationError(const std::string& message) : NumericError(message) {}
};

[[noreturn]] void throwInput(const std::string& message);
[[noreturn]] void throwConfig(const std::string& message);

} // namespace pas
