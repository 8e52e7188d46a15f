// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#include "btk/error.hpp"

namespace btk {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kInvalidId: return "InvalidId";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kManifestMismatch: return "ManifestMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kEmptyBank: return "EmptyBank";
    case ErrorCode::kMissingEntry: return "MissingEntry";
    case ErrorCode::kEmptySubgoalList: return "EmptySubgoalList";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kEmptyInstruction: return "EmptyInstruction";
    case ErrorCode::kEmptyPhrase: return "EmptyPhrase";
    case ErrorCode::kEmptyKnowledge: return "EmptyKnowledge";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kDuplicateNode: return "DuplicateNode";
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kInvalidState: return "InvalidState";
    case ErrorCode::kMissingGoal: return "MissingGoal";
    case ErrorCode::kInvalidPath: return "InvalidPath";
    case ErrorCode::kTooFewVectors: return "TooFewVectors";
    case ErrorCode::kInternalConsistency: return "InternalConsistency";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace btk
