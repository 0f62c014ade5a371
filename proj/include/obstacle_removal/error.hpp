#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obstacle_removal {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDepth,
  InvalidScene,
  InvalidRotation,
  UnknownObjectId,
  EmptyUnion,
  FrameMismatch,
  TooFewPoints,
  DegenerateConfiguration,
  InsufficientDepth,
  IllConditioned,
  InvalidTarget,
  NothingHeld,
  SequenceRegression,
  TopicMismatch,
  Unattributable,
  InvalidConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::NonPositiveDepth: return "non-positive depth";
    case ErrorCode::InvalidScene: return "invalid scene";
    case ErrorCode::InvalidRotation: return "invalid rotation";
    case ErrorCode::UnknownObjectId: return "unknown object id";
    case ErrorCode::EmptyUnion: return "empty union";
    case ErrorCode::FrameMismatch: return "frame mismatch";
    case ErrorCode::TooFewPoints: return "too few points";
    case ErrorCode::DegenerateConfiguration: return "degenerate configuration";
    case ErrorCode::InsufficientDepth: return "insufficient depth";
    case ErrorCode::IllConditioned: return "ill-conditioned";
    case ErrorCode::InvalidTarget: return "invalid target";
    case ErrorCode::NothingHeld: return "nothing held";
    case ErrorCode::SequenceRegression: return "sequence regression";
    case ErrorCode::TopicMismatch: return "topic mismatch";
    case ErrorCode::Unattributable: return "unattributable";
    case ErrorCode::InvalidConfig: return "invalid config";
  }
  return "unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace obstacle_removal
