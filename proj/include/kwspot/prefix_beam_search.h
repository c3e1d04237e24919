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

#ifndef KWSPOT_PREFIX_BEAM_SEARCH_H_
#define KWSPOT_PREFIX_BEAM_SEARCH_H_

#include <string>
#include <vector>

#include "kwspot/bias_trie.h"
#include "kwspot/lm.h"
#include "kwspot/posteriorgram.h"
#include "kwspot/units.h"

namespace kwspot {

struct BeamConfig {
  int beam_size = 10;
  int nbest = 10;
  double lm_weight = 0.3;
  // Units below this per-frame log posterior are never used to extend.
  double token_min_logp = -12.0;
  // At most this many units extend prefixes per frame; 0 means beam_size.
  int max_tokens_per_frame = 0;
  bool bias_enabled = true;
};

struct NBestEntry {
  UnitSeq tokens;
  std::string text;
  double score_am = 0.0;    // natural log CTC prefix mass
  double score_lm = 0.0;    // log10
  double score_bias = 0.0;  // natural log units
  double score_total = 0.0;
  std::vector<TokenSpan> spans;
};

// Combines the three components the way the search ranks prefixes.
inline double TotalScore(double am, double lm_log10, double bias,
                         double lm_weight) {
  return am + lm_weight * 2.302585092994046 * lm_log10 + bias;
}

// CTC prefix beam search with optional n-gram shallow fusion and keyword
// biasing. `lm` and `trie` may be null. Ties are broken by lexicographic
// token order, so the result is fully deterministic.
std::vector<NBestEntry> PrefixBeamSearch(const Posteriorgram& pg,
                                         const UnitSet& units,
                                         const NGramLM* lm,
                                         const KeywordTrie* trie,
                                         const BeamConfig& cfg,
                                         const BiasConfig& bias = {});

// Best path decoding as a one-entry N-best list (no LM, no bias).
std::vector<NBestEntry> GreedyNBest(const Posteriorgram& pg,
                                    const UnitSet& units);

// One JSON object per utterance:
// {"utt_id", "hyps": [{"text", "tokens", "score_am", "score_lm",
//   "score_bias", "score_total", "spans": [[start, end, peak], ...]}]}
std::string NBestToJson(const std::string& utt_id,
                        const std::vector<NBestEntry>& hyps);
std::vector<NBestEntry> NBestFromJson(std::string_view line,
                                      std::string* utt_id);

}  // namespace kwspot

#endif  // KWSPOT_PREFIX_BEAM_SEARCH_H_
