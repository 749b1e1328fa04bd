// Copyright 2026 The mvcorr Authors
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

namespace mvcorr {

enum class ErrorCode {
  kMalformed,
  kInvariantViolation,
  kVersionUnsupported,
  kMissingLayer,
  kDegenerateSpec,
  kDegenerateSample,
  kNameCollision,
  kIo,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformed: return "MALFORMED";
    case ErrorCode::kInvariantViolation: return "INVARIANT_VIOLATION";
    case ErrorCode::kVersionUnsupported: return "VERSION_UNSUPPORTED";
    case ErrorCode::kMissingLayer: return "MISSING_LAYER";
    case ErrorCode::kDegenerateSpec: return "DEGENERATE_SPEC";
    case ErrorCode::kDegenerateSample: return "DEGENERATE_SAMPLE";
    case ErrorCode::kNameCollision: return "NAME_COLLISION";
    case ErrorCode::kIo: return "IO";
  }
  return "UNKNOWN";
}

// All data errors raised by the library carry a machine-readable code. The
// message is prefixed with the code name so it can be printed as-is.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mvcorr
