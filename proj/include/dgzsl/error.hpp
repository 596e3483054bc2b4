#pragma once

#include <stdexcept>
#include <string>

namespace dgzsl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input files and datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or unknown key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgzsl
