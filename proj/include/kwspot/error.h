// Copyright (c) 2026 The kwspot Authors
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

#ifndef KWSPOT_ERROR_H_
#define KWSPOT_ERROR_H_

#include <stdexcept>
#include <string>

namespace kwspot {

enum class ErrorCode {
  kDuplicateUnit,
  kEmptyUnitSet,
  kOutOfVocabulary,
  kBadFormat,
  kInvalidTranscript,
  kAlignmentInfeasible,
  kEmptyCorpus,
  kInvalidKeyword,
  kUnitSetMismatch,
  kBadSyllable,
  kNoScorableKeywords,
  kIo,
  kInvalidArgument,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception; `code()` lets
// callers (and the CLI exit-code mapping) branch on the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kwspot

#endif  // KWSPOT_ERROR_H_
