#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpa {

enum class ErrorCode {
  NotInFrontOfCamera,
  NonPositiveDepth,
  GimbalLock,
  InvalidArgument,
  TooFewPoints,
  DegenerateConic,
  NotACone,
  ParallelLine,
  LineParallelToPlane,
  BehindCamera,
  AmbiguousDisambiguation,
  InconsistentInput,
  DegenerateDirection,
  UnknownLuminaire,
  PreconditionViolated,
  TooFewLuminaires,
  NonConvergence,
  SamplingExhausted,
  NotVisible,
  ArcTooShort,
  MismatchedCaptures,
  ConfigInvalid,
  NoSuccessfulRecords,
  IoFailure,
  UsageError,
  FileNotFound,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInFrontOfCamera: return "NotInFrontOfCamera";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::GimbalLock: return "GimbalLock";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateConic: return "DegenerateConic";
    case ErrorCode::NotACone: return "NotACone";
    case ErrorCode::ParallelLine: return "ParallelLine";
    case ErrorCode::LineParallelToPlane: return "LineParallelToPlane";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::AmbiguousDisambiguation: return "AmbiguousDisambiguation";
    case ErrorCode::InconsistentInput: return "InconsistentInput";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::UnknownLuminaire: return "UnknownLuminaire";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::TooFewLuminaires: return "TooFewLuminaires";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SamplingExhausted: return "SamplingExhausted";
    case ErrorCode::NotVisible: return "NotVisible";
    case ErrorCode::ArcTooShort: return "ArcTooShort";
    case ErrorCode::MismatchedCaptures: return "MismatchedCaptures";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::NoSuccessfulRecords: return "NoSuccessfulRecords";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::FileNotFound: return "FileNotFound";
  }
  return "Unknown";
}

/// Single exception type for the library; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vpa
