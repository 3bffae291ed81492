// Copyright 2026 The Promptveil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROMPTVEIL_ERROR_H_
#define PROMPTVEIL_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace promptveil {

enum class ErrorCode {
  kInvalidArgument,
  kPositionOutOfRange,
  kPositionNotMasked,
  kEmptyCorpus,
  kNerProviderFailure,
  kProviderFailure,
  kOutOfVocabulary,
  kSurrogateFailure,
  kEmptyResults,
  kJudgeFailure,
  kUnparseableJudgment,
  kParseError,
  kConfigError,
  kTransportError,
  kUnboundPlaceholder,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the obfuscator; names the pipeline stage that failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), stage + ": " + cause.what()), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace promptveil

#endif  // PROMPTVEIL_ERROR_H_
