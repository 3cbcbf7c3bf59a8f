#pragma once

#include <stdexcept>
#include <string>

namespace tvode {

// Every failure the library can report. The numeric values are mirrored by
// the tvode_status enum of the C API and must stay in sync with it.
enum class ErrorCode {
  InvalidArgument = 1,
  IoError,
  MalformedHeader,
  UnsupportedFormat,
  TruncatedData,
  RaggedRows,
  NonNumericCell,
  InvalidRecord,
  NetworkError,
  ChecksumMismatch,
  GridCoverage,
  NonFinite,
  InsufficientSupport,
  SingularDesign,
  TooFewKnots,
  InsufficientWindow,
  EmptyAfterTrim,
  MissingLead,
  SingleClass,
  DegenerateFeatures,
  DimensionMismatch,
  EmptyPair,
  EmptyClass,
  TooFewRows,
  UnknownLeadSet,
  InvalidConfig,
  SampleOverflow,
  ModelFormat,
  EmptyOutput,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace tvode
