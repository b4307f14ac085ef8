#pragma once

#include <stdexcept>
#include <string>

namespace scmpc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteMatrix : public Error {
 public:
  using Error::Error;
};

class CholeskyFailure : public Error {
 public:
  using Error::Error;
};

class Overflow : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised when a caller requires a solved program and the solver did not get there.
class StatusNotSolved : public Error {
 public:
  using Error::Error;
};

}  // namespace scmpc
