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

#ifndef KWSPOT_EVAL_H_
#define KWSPOT_EVAL_H_

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kwspot/kws.h"

namespace kwspot {

struct RefOccurrence {
  std::string utt_id;
  std::string kw_id;
  double start_s = 0.0;
  double end_s = 0.0;
};

enum class OverlapRule { kMidpoint, kMinOverlap };

struct EvalConfig {
  double atwv_beta = 999.9;
  double total_speech_s = 0.0;
  OverlapRule overlap = OverlapRule::kMidpoint;
  // Fraction of the reference span a hit must cover under kMinOverlap.
  double min_overlap_fraction = 0.5;
};

// TSV: utt_id kw_id start_s end_s
std::vector<RefOccurrence> ParseRefs(std::string_view text);
std::string FormatRefs(const std::vector<RefOccurrence>& refs);

struct HitAlignment {
  std::vector<std::pair<size_t, size_t>> true_positives;  // (hit, ref)
  std::vector<size_t> false_alarms;                       // hit indices
  std::vector<size_t> misses;                             // ref indices
};

// One-to-one matching inside each (utt, kw), hits taken in descending score.
// Only decision-true hits take part.
HitAlignment AlignHits(const std::vector<Hit>& hits,
                       const std::vector<RefOccurrence>& refs,
                       const EvalConfig& cfg);

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
F1Score ComputeF1(size_t tp, size_t fp, size_t fn);

struct KeywordTwv {
  std::string kw_id;
  int n_true = 0;
  int n_correct = 0;
  int n_false_alarm = 0;
  int n_miss = 0;
  std::optional<double> twv;  // absent for keywords without references
};

struct AtwvResult {
  double atwv = 0.0;
  std::vector<KeywordTwv> keywords;  // sorted by kw_id
  int unscored_false_alarms = 0;     // FAs on keywords with no references
};

// Mean over keywords with references of 1 - P_miss - beta * P_fa, with
// P_fa = N_fa / (total_speech_s - N_true). Throws kNoScorableKeywords.
AtwvResult ComputeAtwv(const std::vector<Hit>& hits,
                       const std::vector<RefOccurrence>& refs,
                       const HitAlignment& alignment, const EvalConfig& cfg);

struct SweepPoint {
  double threshold = 0.0;
  F1Score f1;
  double atwv = 0.0;
};

struct EvalReport {
  size_t tp = 0, fp = 0, fn = 0;
  F1Score f1;
  AtwvResult atwv;
  std::vector<SweepPoint> sweep;
};

// Scores hits as given (their decision flags), plus a sweep that re-decides
// every hit at 50 thresholds evenly spaced over the observed score range.
EvalReport Evaluate(const std::vector<Hit>& hits,
                    const std::vector<RefOccurrence>& refs,
                    const EvalConfig& cfg, int sweep_points = 50);

std::string EvalReportToJson(const EvalReport& report);

}  // namespace kwspot

#endif  // KWSPOT_EVAL_H_
