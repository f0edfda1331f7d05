#pragma once

#include <stdexcept>
#include <string>

namespace hypflow {

enum class ErrorKind { Input, Numerical };

// Every module error carries a stable machine-readable code ("not-hyperbolic",
// "solve-singular", ...) alongside the human message.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, std::string code, std::string const &message)
    : std::runtime_error(message), kind_(kind), code_(std::move(code))
  {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string const &code() const noexcept { return code_; }

private:
  ErrorKind kind_;
  std::string code_;
};

class InputError : public Error
{
public:
  InputError(std::string code, std::string const &message)
    : Error(ErrorKind::Input, std::move(code), message)
  {}
};

class NumericalError : public Error
{
public:
  NumericalError(std::string code, std::string const &message)
    : Error(ErrorKind::Numerical, std::move(code), message)
  {}
};

/// Raised by solve() when the system is singular or too ill-conditioned.
class SolveError : public NumericalError
{
public:
  SolveError(double condition, std::string const &message)
    : NumericalError("solve-ill-conditioned", message), condition_(condition)
  {}
  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

} // namespace hypflow
