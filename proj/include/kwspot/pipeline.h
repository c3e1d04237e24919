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

#ifndef KWSPOT_PIPELINE_H_
#define KWSPOT_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kwspot/bias_trie.h"
#include "kwspot/eval.h"
#include "kwspot/kws.h"
#include "kwspot/lm.h"
#include "kwspot/posteriorgram.h"
#include "kwspot/prefix_beam_search.h"
#include "kwspot/toy_corpus.h"
#include "kwspot/units.h"

namespace kwspot {

struct PipelinePaths {
  std::filesystem::path chars;
  std::filesystem::path sylls;
  std::filesystem::path lexicon;
  std::filesystem::path char_lm;
  std::filesystem::path syll_lm;
  std::filesystem::path keywords;
  std::filesystem::path cost_table;      // optional
  std::filesystem::path char_confusion;  // optional
  std::filesystem::path syll_confusion;  // optional
};

struct RunConfig {
  uint64_t seed = 0;
  int jobs = 1;
  int lm_order = 4;
  double lm_discount = 0.75;
};

struct PipelineConfig {
  PipelinePaths paths;
  BeamConfig beam;
  BiasConfig bias;
  KwsConfig kws;
  EvalConfig eval;
  SynthConfig synth;  // confusion tables come from paths
  RunConfig run;
};

// Sections [paths], [beam], [bias], [kws], [eval], [synth] and [run].
// Relative paths are resolved against the directory of the file.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);
std::string FormatPipelineConfig(const PipelineConfig& cfg);
// Throws kInvalidArgument when a value is out of range.
void ValidatePipelineConfig(const PipelineConfig& cfg);

// Everything loaded from the artifact paths.
struct Resources {
  UnitSet chars;
  UnitSet sylls;
  Lexicon lexicon;
  std::vector<Keyword> keywords;
  std::optional<NGramLM> char_lm;
  std::optional<NGramLM> syll_lm;
  std::unique_ptr<PhoneticIndex> phonetics;
  ConfusionTable char_confusion;
  ConfusionTable syll_confusion;
};

// Loads unit sets, lexicon and cost table; keywords, LMs and confusion
// tables only when their paths are set.
Resources LoadResources(const PipelineConfig& cfg);

// Syllable token lines for LM training, using primary pronunciations.
std::vector<std::vector<std::string>> SyllabifyLines(
    const std::vector<std::string>& lines, const Lexicon& lexicon,
    const UnitSet& sylls);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
// thrown is rethrown after all workers finish.
void ParallelFor(int n, int jobs, const std::function<void(int)>& fn);

// utt_id<TAB>text, sorted by utt_id. Throws kBadFormat on duplicates.
std::vector<std::pair<std::string, std::string>> LoadTranscripts(
    const std::filesystem::path& path);

struct Utterance {
  std::string utt_id;
  std::string text;
  Posteriorgram char_pg;
  Posteriorgram syll_pg;
};

struct SynthCorpus {
  std::vector<Utterance> utterances;  // sorted by utt_id
  std::vector<RefOccurrence> refs;
  std::vector<std::string> skipped;   // one message per rejected utterance
  double total_speech_s = 0.0;
};

// Character and syllable posteriorgrams for every transcript, plus the
// reference span of every keyword occurrence. Per-utterance seeds derive
// from the utterance id and `cfg.run.seed`.
SynthCorpus SynthesizeCorpus(
    const std::vector<std::pair<std::string, std::string>>& transcripts,
    const Resources& res, const PipelineConfig& cfg);

// Keyword occurrences in a character transcript with their layout spans.
std::vector<RefOccurrence> FindReferences(const std::string& utt_id,
                                          const UnitSeq& chars,
                                          const std::vector<Keyword>& keywords,
                                          const std::vector<TokenSpan>& layout,
                                          double frame_period_s);

struct DecodeOptions {
  bool greedy = false;
  bool use_lm = true;
  bool use_bias = true;
};

std::vector<std::vector<NBestEntry>> DecodeAll(
    const std::vector<const Posteriorgram*>& pgs, const UnitSet& units,
    const NGramLM* lm, const KeywordTrie* trie, const BeamConfig& beam,
    const BiasConfig& bias, const DecodeOptions& opts, int jobs);

KeywordTrie BuildCharTrie(const Resources& res, const BiasConfig& bias);
KeywordTrie BuildSyllTrie(const Resources& res, const BiasConfig& bias);

struct LadderStage {
  std::string name;
  bool greedy = false;
  bool lm = true;
  bool length_norm = true;
  int nbest = 1;
  bool bias = false;
  bool fuzzy = false;
  bool syllable = false;
};

// greedy, +LM, +length-norm, +N-best, +bias, +fuzzy, +syllable.
std::vector<LadderStage> DefaultLadder(int nbest);

struct LadderRow {
  std::string name;
  size_t tp = 0, fp = 0, fn = 0;
  F1Score f1;
  double atwv = 0.0;
};

struct LadderResult {
  std::vector<LadderRow> rows;
  std::vector<std::vector<Hit>> hits;  // per stage, ordered by utt
};

// Runs each stage over the corpus. Decodes are shared between stages that
// differ only in matching settings.
LadderResult RunLadder(const SynthCorpus& corpus, const Resources& res,
                       const PipelineConfig& cfg,
                       const std::vector<LadderStage>& stages);

std::string LadderReportToJson(const LadderResult& result,
                               const SynthCorpus& corpus);
std::string LadderReportToTable(const LadderResult& result);

// Writes the corpus files, character and syllable ARPA models and a
// kwspot.ini that points at them. Returns the config path.
std::filesystem::path WriteToyWorkspace(const ToyCorpus& corpus, uint64_t seed,
                                        int lm_order,
                                        const std::filesystem::path& dir);

}  // namespace kwspot

#endif  // KWSPOT_PIPELINE_H_
