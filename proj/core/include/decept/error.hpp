#pragma once

#include <stdexcept>
#include <string>

namespace decept {

/// Base class for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An expression references a variable the assignment does not bind.
class UnboundVariable : public Error {
 public:
  explicit UnboundVariable(std::string name)
      : Error("unbound variable '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// A model or program is structurally inconsistent.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

/// Input files or command-line values could not be accepted.
class InputError : public Error {
 public:
  InputError(std::string message, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace decept
