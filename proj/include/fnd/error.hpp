#pragma once

#include <stdexcept>
#include <string>

namespace fnd {

/// Base for every error the library raises. The exit code is what the CLI
/// returns when the error escapes a command.
class Error : public std::runtime_error {
public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

private:
  int exit_code_;
};

/// Bad input data, bad configuration or a violated precondition.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error(what, 2) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what, 3) {}
};

class NetworkError : public Error {
public:
  explicit NetworkError(const std::string& what) : Error(what, 4) {}
};

/// NaN/Inf in a loss, gradient or parameter.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(what, 5) {}
};

}  // namespace fnd
