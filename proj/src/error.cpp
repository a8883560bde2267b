#include "occlabel/error.hpp"

namespace occlabel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidRotation: return "InvalidRotation";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateDistances: return "DegenerateDistances";
    case ErrorCode::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::NoNeighborPairs: return "NoNeighborPairs";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::MissingBoxForFrame: return "MissingBoxForFrame";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::InvalidInputState: return "InvalidInputState";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonRigidRotation: return "NonRigidRotation";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace occlabel
