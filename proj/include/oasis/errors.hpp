#pragma once

#include <stdexcept>
#include <string>

namespace oasis {

enum class ErrorKind {
  NotPositiveDefinite,
  NotSymmetric,
  NegativeEigenvalue,
  DimensionMismatch,
  InsufficientSample,
  CollinearRegressors,
  NonpositiveWeight,
  InvalidPermutation,
  NotInFeasibleSet,
  SingularMatrix,
  NotOrthonormal,
  RhoOutOfRange,
  SingularSubset,
  InvalidArgument,
  FileNotFound,
  UnknownVariable,
  NonPositiveValueUnderLog,
  RaggedRows,
  MissingValue,
  ParseError,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-checkable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace oasis
