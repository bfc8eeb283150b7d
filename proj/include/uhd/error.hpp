#pragma once

#include <stdexcept>
#include <string>

namespace uhd {

/// Base of every error thrown by the library. The CLI maps the concrete
/// subtype onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (shape mismatch, k == 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in the wrong state (e.g. backward without forward).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Tokenization produced nothing to encode.
class EmptyInput : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Input data is malformed (bad TSV line, duplicate ids, nonfinite values).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A binary file has the wrong magic or an unsupported version.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// A binary file is truncated, inconsistent or fails its checksum.
class CorruptFile : public DataError {
 public:
  using DataError::DataError;
};

/// Training produced a nonfinite loss.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(long step, const std::string& what)
      : Error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace uhd
