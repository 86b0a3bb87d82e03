#pragma once

#include <stdexcept>
#include <string>

namespace stereo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (bad sizes, grids, profiles).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation not allowed in the current state (phase machine, trial counters).
class StateError : public Error {
 public:
  using Error::Error;
};

/// The session has finished; no further trials exist.
class CompletedError : public StateError {
 public:
  using StateError::StateError;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace stereo
