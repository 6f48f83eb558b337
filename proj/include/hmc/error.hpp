// Copyright 2026 The hmc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HMC_ERROR_HPP_
#define HMC_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmc {

enum class ErrorCode {
  kDuplicateParent,
  kCycleDetected,
  kUnknownLabel,
  kLevelOutOfRange,
  kLengthMismatch,
  kMalformedLine,
  kPathViolation,
  kIndexOutOfRange,
  kShapeMismatch,
  kNonFiniteValue,
  kNonFiniteLoss,
  kAllFieldsEmpty,
  kEmptyBatch,
  kEmptyInput,
  kNonUnitInput,
  kInvalidArgument,
  kIoError,
  kFormatError,
  kConfigMismatch,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateParent: return "DuplicateParent";
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kLevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kPathViolation: return "PathViolation";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kAllFieldsEmpty: return "AllFieldsEmpty";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonUnitInput: return "NonUnitInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
  }
  return "Unknown";
}

// All library failures surface as hmc::Error; `code()` identifies the
// condition so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hmc

#endif  // HMC_ERROR_HPP_
