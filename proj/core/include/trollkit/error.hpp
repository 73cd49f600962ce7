#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trollkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user-facing configuration: specs, hyperparameters, config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidSpecError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Problems with input data: parsing, integrity, composition.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

class CompositionError : public DataError {
 public:
  using DataError::DataError;
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

/// Pool exhaustion while sampling a population.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class FoldError : public Error {
 public:
  using Error::Error;
};

/// A correction step left nothing to train on.
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace trollkit
