#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace demand {

/// Failure category; the CLI maps each one to its exit code.
enum class ErrorKind { input = 1, numerical = 2, config = 3 };

/// Base library error. Carries the module and operation that raised it so
/// messages read "module::operation: detail".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, std::string operation, const std::string& detail)
      : std::runtime_error(module + "::" + operation + ": " + detail),
        kind_(kind),
        module_(std::move(module)),
        operation_(std::move(operation)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }

 private:
  ErrorKind kind_;
  std::string module_;
  std::string operation_;
};

class InputError : public Error {
 public:
  InputError(std::string module, std::string operation, const std::string& detail)
      : Error(ErrorKind::input, std::move(module), std::move(operation), detail) {}
};

class NumericalError : public Error {
 public:
  NumericalError(std::string module, std::string operation, const std::string& detail)
      : Error(ErrorKind::numerical, std::move(module), std::move(operation), detail) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string module, std::string operation, const std::string& detail)
      : Error(ErrorKind::config, std::move(module), std::move(operation), detail) {}
};

/// Row-level CSV failure; `line()` is 1-based and counts the header.
class ParseError : public InputError {
 public:
  ParseError(std::string operation, std::size_t line, const std::string& detail)
      : InputError("ingest", std::move(operation), "line " + std::to_string(line) + ": " + detail),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace demand
