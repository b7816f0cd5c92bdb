#pragma once

#include <stdexcept>
#include <string>

namespace ipr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied value violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Configuration file could not be parsed or failed validation.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Reading or writing an output/cache file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A serialized file is malformed. The message carries the byte offset.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Model file was written by an incompatible format version.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Training finished without reaching the configured accuracy floor.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Undefined statistic, e.g. correlation of a constant series.
class StatisticsError : public Error {
 public:
  using Error::Error;
};

/// Failure inside the randomization harness, annotated with its grid cell.
class IprError : public Error {
 public:
  using Error::Error;
};

}  // namespace ipr
