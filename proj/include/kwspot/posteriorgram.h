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

#ifndef KWSPOT_POSTERIORGRAM_H_
#define KWSPOT_POSTERIORGRAM_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "kwspot/ctc.h"
#include "kwspot/units.h"

namespace kwspot {

inline constexpr double kDefaultFramePeriod = 0.04;

// Per-frame natural-log posteriors over a unit set (T x V, row-major).
struct Posteriorgram {
  std::string utt_id;
  std::string unit_set_id;
  double frame_period_s = kDefaultFramePeriod;
  LogProbMatrix<float> logp;

  int num_frames() const { return static_cast<int>(logp.rows()); }
  int num_units() const { return static_cast<int>(logp.cols()); }
};

// Throws kBadFormat unless every row log-sums to 0 within 1e-3, no entry
// exceeds 1e-6 and nothing is NaN.
void ValidatePosteriorgram(const Posteriorgram& pg);

// Binary layout (little endian): "BKWS", u16 version=1, u16 len + utt_id,
// u16 len + unit_set_id, f64 frame_period_s, u32 T, u32 V, T*V f32.
std::string EncodePosteriorgram(const Posteriorgram& pg);
Posteriorgram DecodePosteriorgram(std::string_view bytes);
std::string PosteriorgramToJson(const Posteriorgram& pg);
Posteriorgram PosteriorgramFromJson(std::string_view text);

void WritePosteriorgram(const Posteriorgram& pg,
                        const std::filesystem::path& path);
// Accepts either the binary format or the JSON mirror.
Posteriorgram ReadPosteriorgram(const std::filesystem::path& path);

struct TokenSpan {
  UnitId token = kBlankId;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  int peak_frame = 0;
  float peak_logp = 0.0f;
};

struct ConfusionPartner {
  UnitId unit;
  double weight;
};
using ConfusionTable = std::unordered_map<UnitId, std::vector<ConfusionPartner>>;

// TSV: unit<TAB>partner<TAB>weight, one pair per line.
ConfusionTable LoadConfusionTable(const std::filesystem::path& path,
                                  const UnitSet& set);
void WriteConfusionTable(const ConfusionTable& table, const UnitSet& set,
                         const std::filesystem::path& path);

struct SynthConfig {
  int frames_per_token = 4;
  int blank_gap = 5;
  // Mean posterior mass moved off the target unit. Each token occurrence
  // draws its own amount uniformly from a band centred on `noise`; blank
  // frames always lose exactly `noise`.
  double noise = 0.0;
  ConfusionTable confusion;
  uint64_t seed = 0;
  double frame_period_s = kDefaultFramePeriod;
};

// Frame layout for a transcript: blank_gap blanks, then the tokens separated
// by blank_gap blanks (at least one between equal neighbours), then
// blank_gap trailing blanks. Peaks are the first frame of each token.
std::vector<TokenSpan> SynthLayout(const UnitSeq& transcript,
                                   const SynthConfig& cfg);

Posteriorgram SynthGenerate(const UnitSeq& transcript, const UnitSet& set,
                            const SynthConfig& cfg,
                            const std::string& utt_id = "synth");

struct GreedyResult {
  UnitSeq tokens;  // collapsed
  std::vector<UnitId> frame_argmax;
};
GreedyResult GreedyPath(const Posteriorgram& pg);

struct Alignment {
  double log_score = 0.0;
  std::vector<TokenSpan> spans;
};
// Best CTC alignment of `tokens`; throws kAlignmentInfeasible.
Alignment AlignViterbi(const Posteriorgram& pg, const UnitSeq& tokens);

// Stable 64-bit FNV-1a, used to derive per-utterance seeds.
uint64_t StableHash(std::string_view s, uint64_t seed = 0);

}  // namespace kwspot

#endif  // KWSPOT_POSTERIORGRAM_H_
