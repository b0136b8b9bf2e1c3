#pragma once

#include <stdexcept>
#include <string>

namespace pm {

enum class ErrorCode {
  Io = 1,
  MissingColumn,
  DuplicateKey,
  NonNumericCell,
  UnbalancedPanel,
  BoundaryMissing,
  NonPositiveValue,
  MissingCells,
  EmptyMatrix,
  DimensionMismatch,
  ZeroMeanColumn,
  DegenerateWeights,
  AllUniformColumns,
  InvalidArgument,
  ZeroShare,
  RankDeficient,
  TooFewObservations,
  SingularBread,
  TooShortPanel,
  SingularWeighting,
  InsufficientPeriods,
  ExactlyIdentified,
  ZeroDenominator,
  ZeroTotalEffect,
  InvalidConfig,
  StyleMismatch,
  StageFailed,
};

const char* error_code_name(ErrorCode code) noexcept;

/// Every failure in the library surfaces as a pm::Error carrying a code the
/// C API can map to a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pm
