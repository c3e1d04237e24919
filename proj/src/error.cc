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

#include "kwspot/error.h"

namespace kwspot {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateUnit: return "DuplicateUnit";
    case ErrorCode::kEmptyUnitSet: return "EmptyUnitSet";
    case ErrorCode::kOutOfVocabulary: return "OutOfVocabulary";
    case ErrorCode::kBadFormat: return "BadFormat";
    case ErrorCode::kInvalidTranscript: return "InvalidTranscript";
    case ErrorCode::kAlignmentInfeasible: return "AlignmentInfeasible";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInvalidKeyword: return "InvalidKeyword";
    case ErrorCode::kUnitSetMismatch: return "UnitSetMismatch";
    case ErrorCode::kBadSyllable: return "BadSyllable";
    case ErrorCode::kNoScorableKeywords: return "NoScorableKeywords";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace kwspot
