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

#ifndef KWSPOT_KWS_H_
#define KWSPOT_KWS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "kwspot/phonetics.h"
#include "kwspot/posteriorgram.h"
#include "kwspot/prefix_beam_search.h"
#include "kwspot/units.h"

namespace kwspot {

struct Keyword {
  std::string id;
  std::string text;
  UnitSeq char_units;
  UnitSeq syll_units;
};

Keyword MakeKeyword(const std::string& id, const std::string& text,
                    const UnitSet& chars, const Lexicon& lexicon,
                    const UnitSet& sylls);

// TSV: kw_id<TAB>keyword_text
std::vector<Keyword> LoadKeywords(const std::filesystem::path& path,
                                  const UnitSet& chars, const Lexicon& lexicon,
                                  const UnitSet& sylls);

enum class MatchStage { kChar, kSyllable, kFuzzy };
const char* MatchStageName(MatchStage stage);

struct Hit {
  std::string utt_id;
  std::string kw_id;
  MatchStage stage = MatchStage::kChar;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  double start_s = 0.0;
  double end_s = 0.0;
  double raw_log_score = 0.0;  // log of the summed CTC path probability
  double norm_score = 0.0;
  int hyp_rank = 0;
  bool decision = false;
};

struct KwsConfig {
  double fuzzy_threshold = 0.5;
  double decision_threshold = -5.0;
  int window_pad = 5;
  bool char_stage = true;
  bool syllable_stage = true;
  bool fuzzy_stage = true;
  bool length_normalize = true;
};

struct TokenMatch {
  int hyp_rank = 0;
  int begin = 0;  // token index, inclusive
  int end = 0;    // exclusive
  double distance = 0.0;
};

// Every contiguous occurrence of `units` in every hypothesis.
std::vector<TokenMatch> MatchExact(const std::vector<NBestEntry>& nbest,
                                   const UnitSeq& units);

// Lexical resources needed to compare decoded characters phonetically.
class PhoneticIndex {
 public:
  PhoneticIndex(const UnitSet& chars, const Lexicon& lexicon,
                const UnitSet& sylls, CostTable costs);

  const CostTable& costs() const { return costs_; }
  // Primary syllable of a character unit; throws kOutOfVocabulary.
  const Syllable& CharSyllable(UnitId ch) const;
  std::vector<Syllable> CharSyllables(std::span<const UnitId> chars) const;

 private:
  std::vector<Syllable> by_char_;
  std::vector<bool> known_;
  CostTable costs_;
};

// Windows of width |kw| in character hypotheses whose phrase distance to the
// keyword is below `threshold`, excluding windows that spell the keyword.
std::vector<TokenMatch> MatchFuzzy(const std::vector<NBestEntry>& nbest,
                                   const Keyword& kw,
                                   const PhoneticIndex& phonetics,
                                   double threshold);

// log of the total probability of all window paths collapsing to `units`.
// Throws kAlignmentInfeasible when the window is too short.
double ScoreCtc(const Posteriorgram& pg, const UnitSeq& units, int win_start,
                int win_end);

struct FrameWindow {
  int start = 0;
  int end = 0;
};
FrameWindow LocateWindow(std::span<const TokenSpan> matched, int pad,
                         int num_frames);

inline double NormalizeScore(double raw_log_score, int length) {
  return raw_log_score / length;
}

// Hits of the same (utt, kw) with overlapping frame spans collapse to the
// highest-scoring one. Output is sorted by utt, kw, start frame.
std::vector<Hit> MergeStages(std::vector<Hit> hits);

struct StageInput {
  const Posteriorgram* pg = nullptr;
  const std::vector<NBestEntry>* nbest = nullptr;
};

std::vector<Hit> Detect(const StageInput& char_stage,
                        const StageInput& syll_stage,
                        const std::vector<Keyword>& keywords,
                        const PhoneticIndex& phonetics, const KwsConfig& cfg);

// TSV: utt_id kw_id start_s end_s norm_score decision stage
std::string FormatHits(const std::vector<Hit>& hits);
std::vector<Hit> ParseHits(std::string_view text);

}  // namespace kwspot

#endif  // KWSPOT_KWS_H_
