/* Copyright 2026 The Summit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace summit {

/// Machine-readable failure categories shared by every module. The string
/// form (see to_string) is what the HTTP facade and the CLIs emit.
enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kAuthRequired,
  kRateLimited,
  kMalformedResponse,
  kIoError,
  kSchemaViolation,
  kThreadMismatch,
  kUnknownPlaceholder,
  kUnknownType,
  kUnknownSentence,
  kEmptyInput,
  kUnknownComment,
  kNoSentencesOfType,
  kConflictingMembership,
  kDuplicateInfoType,
  kVersionConflict,
  kUnknownThread,
  kUnknownSelector,
  kRankerTimeout,
  kEmptyGold,
  kLengthMismatch,
  kDegenerateAgreement,
  kEmptySample,
  kStorageError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kAuthRequired: return "AuthRequired";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kThreadMismatch: return "ThreadMismatch";
    case ErrorCode::kUnknownPlaceholder: return "UnknownPlaceholder";
    case ErrorCode::kUnknownType: return "UnknownType";
    case ErrorCode::kUnknownSentence: return "UnknownSentence";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUnknownComment: return "UnknownComment";
    case ErrorCode::kNoSentencesOfType: return "NoSentencesOfType";
    case ErrorCode::kConflictingMembership: return "ConflictingMembership";
    case ErrorCode::kDuplicateInfoType: return "DuplicateInfoType";
    case ErrorCode::kVersionConflict: return "VersionConflict";
    case ErrorCode::kUnknownThread: return "UnknownThread";
    case ErrorCode::kUnknownSelector: return "UnknownSelector";
    case ErrorCode::kRankerTimeout: return "RankerTimeout";
    case ErrorCode::kEmptyGold: return "EmptyGold";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateAgreement: return "DegenerateAgreement";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kStorageError: return "StorageError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace summit
