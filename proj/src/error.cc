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

#include "dfcast/error.h"

namespace dfcast {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNegativeMass: return "NegativeMass";
    case ErrorCode::kZeroMass: return "ZeroMass";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSizeOverflow: return "SizeOverflow";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kRefinementExhausted: return "RefinementExhausted";
    case ErrorCode::kValidityViolation: return "ValidityViolation";
    case ErrorCode::kNegativeCapital: return "NegativeCapital";
    case ErrorCode::kProtocolOrderViolation: return "ProtocolOrderViolation";
    case ErrorCode::kSideBetInvalid: return "SideBetInvalid";
    case ErrorCode::kUnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::kScriptExhausted: return "ScriptExhausted";
    case ErrorCode::kSinkFailure: return "SinkFailure";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::size_t line)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      line_(line) {}

}  // namespace dfcast
