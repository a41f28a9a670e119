#include "doceval/error.hpp"

namespace doceval {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NoTableFound: return "NoTableFound";
    case ErrorCode::EncodingError: return "EncodingError";
    case ErrorCode::TreeTooLarge: return "TreeTooLarge";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::UnlabeledExample: return "UnlabeledExample";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyDump: return "EmptyDump";
    case ErrorCode::EmptyGridSet: return "EmptyGridSet";
    case ErrorCode::DatasetUnreadable: return "DatasetUnreadable";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::BadModel: return "BadModel";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code),
      detail_(detail) {}

}  // namespace doceval
