#pragma once

#include <stdexcept>
#include <string>

namespace samo {

// Error families map onto the CLI exit codes: DataError -> 2, NumericError -> 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : DataError {
  using DataError::DataError;
};
struct ParseError : DataError {
  using DataError::DataError;
};
struct DimensionMismatch : DataError {
  using DataError::DataError;
};
struct ProtocolError : DataError {
  using DataError::DataError;
};
struct IoError : DataError {
  using DataError::DataError;
};
struct UnknownSpeaker : DataError {
  using DataError::DataError;
};
struct TooManySpeakers : DataError {
  using DataError::DataError;
};
struct MissingEnrollment : DataError {
  using DataError::DataError;
};
struct EmptyClass : DataError {
  using DataError::DataError;
};
struct InvalidCoefficients : DataError {
  using DataError::DataError;
};

struct ZeroNorm : NumericError {
  using NumericError::NumericError;
};
struct DegenerateData : NumericError {
  using NumericError::NumericError;
};
struct EmptyAttractors : NumericError {
  using NumericError::NumericError;
};
struct NonFiniteLoss : NumericError {
  using NumericError::NumericError;
};

}  // namespace samo
