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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aqaa {

enum class ErrorCode {
  kInvalidConfiguration,
  kOutOfVocabulary,
  kInvalidFrame,
  kMisalignedStream,
  kClassMismatch,
  kFormat,
  kEmptyResponse,
  kAlignment,
  kDegeneratePair,
  kSequenceLength,
  kNumeric,
  kIncompatibleCheckpoint,
  kIo,
  kDivergence,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code so
// callers (the CLI, the acceptance suite) can branch on the kind of error
// without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Format errors additionally report the first offending index.
class FormatError : public Error {
 public:
  FormatError(std::size_t index, const std::string& message);

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Incompatible checkpoints name the first tensor that differs.
class IncompatibleCheckpointError : public Error {
 public:
  IncompatibleCheckpointError(std::string tensor, const std::string& message);

  const std::string& tensor() const noexcept { return tensor_; }

 private:
  std::string tensor_;
};

// Divergence carries the optimizer step at which the loss went non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(long step, const std::string& message);

  long step() const noexcept { return step_; }

 private:
  long step_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace aqaa
