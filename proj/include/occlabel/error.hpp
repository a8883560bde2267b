#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace occlabel {

enum class ErrorCode {
  InvalidArgument,
  InvalidRotation,
  EmptyInput,
  DegenerateDistances,
  LevelOutOfRange,
  EmptyTrajectory,
  NoNeighborPairs,
  DegenerateConfiguration,
  CountMismatch,
  MissingBoxForFrame,
  FrameMismatch,
  InvalidInputState,
  EmptyCloud,
  SpecMismatch,
  InvalidSpec,
  MalformedHeader,
  UnsupportedFormat,
  TruncatedPayload,
  ParseError,
  NonRigidRotation,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure path in occlabel throws this with a
/// machine-checkable code; the message carries the human context (file, line,
/// offending record).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace occlabel
