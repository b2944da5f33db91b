/*
 * Copyright 2026 The xfersched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace xfersched {

enum class ErrorCode {
  InvalidArgument,
  NotTopological,
  EmptyProfile,
  DegenerateInput,
  UnsupportedWorkerCount,
  InfeasibleGroup,
  CycleIntroduced,
  DeadlockDetected,
  Parse,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotTopological: return "NotTopological";
    case ErrorCode::EmptyProfile: return "EmptyProfile";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UnsupportedWorkerCount: return "UnsupportedWorkerCount";
    case ErrorCode::InfeasibleGroup: return "InfeasibleGroup";
    case ErrorCode::CycleIntroduced: return "CycleIntroduced";
    case ErrorCode::DeadlockDetected: return "DeadlockDetected";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Parse and I/O failures are input problems; everything else is a domain violation.
  bool is_input_error() const noexcept {
    return code_ == ErrorCode::Parse || code_ == ErrorCode::Io;
  }

 private:
  ErrorCode code_;
};

}  // namespace xfersched
