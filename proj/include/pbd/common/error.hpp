// Copyright 2026 The pbd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
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

namespace pbd {

enum class ErrorCode {
  kMalformed,
  kMalformedKey,
  kInvalidArgument,
  kInternal,
  kIo,
  kConfig,
  // envelope open
  kKeyMismatch,
  kTypeMismatch,
  kSignatureInvalid,
  // identity
  kDuplicateEnrollment,
  kUnknownMaster,
  kEvidenceRejected,
  kDecryptFail,
  // regulator / te
  kAccessDenied,
  kTypeViolation,
  kStructuralReject,
  // scenarios
  kBadDoctorSignature,
  kBadPaymentFile,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace pbd
