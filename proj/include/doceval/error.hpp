#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace doceval {

enum class ErrorCode {
  NoTableFound,
  EncodingError,
  TreeTooLarge,
  DimMismatch,
  UnlabeledExample,
  EmptyClass,
  DegenerateLabels,
  UnknownLabel,
  EmptyDump,
  EmptyGridSet,
  DatasetUnreadable,
  MalformedRecord,
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  BadModel,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace doceval
