// Copyright 2026 The aqaa-forge Authors
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

#include "aqaa/error.hpp"

namespace aqaa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfiguration: return "invalid-configuration";
    case ErrorCode::kOutOfVocabulary: return "out-of-vocabulary";
    case ErrorCode::kInvalidFrame: return "invalid-frame";
    case ErrorCode::kMisalignedStream: return "misaligned-stream";
    case ErrorCode::kClassMismatch: return "class-mismatch";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kEmptyResponse: return "empty-response";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kDegeneratePair: return "degenerate-pair";
    case ErrorCode::kSequenceLength: return "sequence-length";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kIncompatibleCheckpoint: return "incompatible-checkpoint";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kDivergence: return "divergence";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + " error: " + message), code_(code) {}

FormatError::FormatError(std::size_t index, const std::string& message)
    : Error(ErrorCode::kFormat, message + " (at index " + std::to_string(index) + ")"),
      index_(index) {}

IncompatibleCheckpointError::IncompatibleCheckpointError(std::string tensor,
                                                         const std::string& message)
    : Error(ErrorCode::kIncompatibleCheckpoint, message + " (tensor '" + tensor + "')"),
      tensor_(std::move(tensor)) {}

DivergenceError::DivergenceError(long step, const std::string& message)
    : Error(ErrorCode::kDivergence, message + " (step " + std::to_string(step) + ")"),
      step_(step) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace aqaa
