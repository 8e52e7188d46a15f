// Copyright 2026 The BTK Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace btk {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kDuplicateId,
  kInvalidId,
  kNonFiniteFeature,
  kIoFailure,
  kBadMagic,
  kVersionUnsupported,
  kTruncatedPayload,
  kManifestMismatch,
  kZeroVector,
  kEmptyBank,
  kMissingEntry,
  kEmptySubgoalList,
  kNonFiniteInput,
  kNonFiniteGradient,
  kEmptyInstruction,
  kEmptyPhrase,
  kEmptyKnowledge,
  kParseError,
  kInvariantViolation,
  kDuplicateNode,
  kUnknownNode,
  kInvalidState,
  kMissingGoal,
  kInvalidPath,
  kTooFewVectors,
  kInternalConsistency,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace btk
