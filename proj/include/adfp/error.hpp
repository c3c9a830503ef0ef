// Copyright 2026 The adfp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adfp {

enum class ErrorCode {
  kInvalidArgument,
  kMalformed,
  kDuplicateName,
  kCountInvariant,
  kUnknownAttribute,
  kUnknownMeta,
  kEmptyInput,
  kSingleClass,
  kFoldTooSmall,
  kChannelMismatch,
  kRegistryMismatch,
  kOverlappingPattern,
  kStorage,
  kIo,
  kInternal,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kDuplicateName: return "duplicate-name";
    case ErrorCode::kCountInvariant: return "count-invariant";
    case ErrorCode::kUnknownAttribute: return "unknown-attribute";
    case ErrorCode::kUnknownMeta: return "unknown-meta";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kSingleClass: return "single-class";
    case ErrorCode::kFoldTooSmall: return "fold-too-small";
    case ErrorCode::kChannelMismatch: return "channel-mismatch";
    case ErrorCode::kRegistryMismatch: return "registry-mismatch";
    case ErrorCode::kOverlappingPattern: return "overlapping-pattern";
    case ErrorCode::kStorage: return "storage";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

// Every failure surfaced by the library carries one of the codes above so
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace adfp
