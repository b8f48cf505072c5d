// Copyright 2026 The dfcast Authors
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

#ifndef DFCAST_ERROR_H_
#define DFCAST_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dfcast {

enum class ErrorCode {
  kInvalidArgument,
  kNegativeMass,
  kZeroMass,
  kDimensionMismatch,
  kSizeOverflow,
  kIndexOutOfRange,
  kNumericalFailure,
  kRefinementExhausted,
  kValidityViolation,
  kNegativeCapital,
  kProtocolOrderViolation,
  kSideBetInvalid,
  kUnsupportedDimension,
  kScriptExhausted,
  kSinkFailure,
  kParseError,
  kSchemaVersionMismatch,
  kConfigError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; code() identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0);

  ErrorCode code() const { return code_; }
  // 1-based source line for parse errors, 0 otherwise.
  std::size_t line() const { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace dfcast

#endif  // DFCAST_ERROR_H_
