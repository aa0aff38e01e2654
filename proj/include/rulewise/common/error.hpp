#pragma once

#include <stdexcept>
#include <string>

namespace rulewise {

/// Base for all recoverable failures raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration (unknown keys, bad values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data files and splits.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite losses or other failures during optimization.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace rulewise
