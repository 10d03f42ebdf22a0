#pragma once

#include <stdexcept>
#include <string>

namespace fret {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotErgodic : public Error {
 public:
  using Error::Error;
};

class DegenerateRareEvent : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class MaxStepsExceeded : public Error {
 public:
  using Error::Error;
};

class PathTooShort : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed scenario, model or command-line configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A verifier was asked to run on a family that fails one of its
/// precondition checkers. The message names the failing conditions.
class PreconditionFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace fret
