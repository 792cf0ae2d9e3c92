#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace utpcr {

enum class ErrorCode {
  EmptyDocument,
  UnterminatedTag,
  ScoreOutOfRange,
  MissingDecision,
  DuplicateDecision,
  MissingDimension,
  PlanTagMissing,
  InvalidConfig,
  JudgeUnavailable,
  MalformedReply,
  InvalidRequest,
  GroupTooSmall,
  DegeneratePolicy,
  ConfigInvalid,
  IoError,
  SchemaError,
  DuplicateId,
  UnscoredRecord,
  UnmatchedTrajectory,
  EmptyInput,
  NoReflections,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::UnterminatedTag: return "UnterminatedTag";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::MissingDecision: return "MissingDecision";
    case ErrorCode::DuplicateDecision: return "DuplicateDecision";
    case ErrorCode::MissingDimension: return "MissingDimension";
    case ErrorCode::PlanTagMissing: return "PlanTagMissing";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::JudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::MalformedReply: return "MalformedReply";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::DegeneratePolicy: return "DegeneratePolicy";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnscoredRecord: return "UnscoredRecord";
    case ErrorCode::UnmatchedTrajectory: return "UnmatchedTrajectory";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoReflections: return "NoReflections";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace utpcr
