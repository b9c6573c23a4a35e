#pragma once

#include <stdexcept>
#include <string>

namespace srmpc {

// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or a violated precondition on a value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An API was called in a state where it is not allowed (e.g. stepping a
// terminated episode).
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LinearizationError : public Error {
 public:
  using Error::Error;
};

// A policy rollout could not produce a usable reference trajectory.
class RolloutError : public Error {
 public:
  using Error::Error;
};

}  // namespace srmpc
