#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptzlm {

enum class ErrorCode {
  UnknownEnvironment,
  InvalidObjectCount,
  InvalidScene,
  InvalidState,
  InvalidInstance,
  EmptyScores,
  LengthMismatch,
  EmptyRequest,
  ShotCountExceedsPool,
  Timeout,
  TransportError,
  AuthError,
  MalformedEndpointReply,
  DuplicatePromptFingerprint,
  InvalidEndpoint,
  InsufficientSeeds,
  NoArrayFound,
  InvalidTarget,
  InvalidCheckpoint,
  TaskSetMismatch,
  UnreadableDataset,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownEnvironment: return "UnknownEnvironment";
    case ErrorCode::InvalidObjectCount: return "InvalidObjectCount";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyRequest: return "EmptyRequest";
    case ErrorCode::ShotCountExceedsPool: return "ShotCountExceedsPool";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::MalformedEndpointReply: return "MalformedEndpointReply";
    case ErrorCode::DuplicatePromptFingerprint: return "DuplicatePromptFingerprint";
    case ErrorCode::InvalidEndpoint: return "InvalidEndpoint";
    case ErrorCode::InsufficientSeeds: return "InsufficientSeeds";
    case ErrorCode::NoArrayFound: return "NoArrayFound";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::InvalidCheckpoint: return "InvalidCheckpoint";
    case ErrorCode::TaskSetMismatch: return "TaskSetMismatch";
    case ErrorCode::UnreadableDataset: return "UnreadableDataset";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ptzlm
