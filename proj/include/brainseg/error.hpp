#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace brainseg {

enum class ErrorCode {
  MissingFile,
  UnsupportedFormat,
  CorruptHeader,
  OutOfRangeLabel,
  DimensionMismatch,
  DuplicateId,
  EmptyDataset,
  ManifestParse,
  InsufficientPixels,
  InvalidConfig,
  UnknownClass,
  InvalidK,
  ModelLoadError,
  MissingCell,
  IoError,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::OutOfRangeLabel: return "OutOfRangeLabel";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ManifestParse: return "ManifestParse";
    case ErrorCode::InsufficientPixels: return "InsufficientPixels";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::ModelLoadError: return "ModelLoadError";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Re-raise with context prepended (entry id, fold id, pixel...).
  [[noreturn]] void rethrow_with_context(const std::string& context) const {
    throw Error(code_, context + ": " + what());
  }

 private:
  ErrorCode code_;
};

}  // namespace brainseg
