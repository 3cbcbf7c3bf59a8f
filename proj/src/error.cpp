#include "error.hpp"

namespace tvode {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::GridCoverage: return "GridCoverage";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InsufficientSupport: return "InsufficientSupport";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::TooFewKnots: return "TooFewKnots";
    case ErrorCode::InsufficientWindow: return "InsufficientWindow";
    case ErrorCode::EmptyAfterTrim: return "EmptyAfterTrim";
    case ErrorCode::MissingLead: return "MissingLead";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DegenerateFeatures: return "DegenerateFeatures";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyPair: return "EmptyPair";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::UnknownLeadSet: return "UnknownLeadSet";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SampleOverflow: return "SampleOverflow";
    case ErrorCode::ModelFormat: return "ModelFormat";
    case ErrorCode::EmptyOutput: return "EmptyOutput";
  }
  return "Unknown";
}

}  // namespace tvode
