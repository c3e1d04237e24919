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

#ifndef KWSPOT_PHONETICS_H_
#define KWSPOT_PHONETICS_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kwspot {

struct Syllable {
  std::string initial;  // may be empty
  std::string final;
  int tone = 0;         // 0 = neutral

  bool operator==(const Syllable&) const = default;
  std::string ToString() const;
};

// "zhong1" -> {zh, ong, 1}. Longest-match initial; throws kBadSyllable when
// the tone digit or the final is missing.
Syllable ParseSyllable(std::string_view s);

struct ConfusionGroup {
  std::vector<std::string> members;
  double cost = 0.5;
};

struct CostTable {
  std::vector<ConfusionGroup> initial_groups;
  std::vector<ConfusionGroup> final_groups;
  double tone_cost = 0.2;
  // Cost of an initial or final pair outside any shared group. Also caps the
  // per-syllable substitution cost inside the phrase alignment.
  double substitution_cost = 1.0;
  double indel_cost = 1.0;

  static CostTable Default();

  double InitialCost(const std::string& a, const std::string& b) const;
  double FinalCost(const std::string& a, const std::string& b) const;
};

// Sections [initial_groups] and [final_groups] hold lines like
// "zh,z = 0.5"; [costs] holds tone, substitution and indel. Missing
// sections keep their defaults.
CostTable LoadCostTable(const std::filesystem::path& path);

double SyllableDistance(const Syllable& a, const Syllable& b,
                        const CostTable& costs);

// Edit distance with syllable-distance substitutions, normalised by the
// longer length. Empty vs empty is 0.
double PhraseDistance(std::span<const Syllable> a, std::span<const Syllable> b,
                      const CostTable& costs);

}  // namespace kwspot

#endif  // KWSPOT_PHONETICS_H_
