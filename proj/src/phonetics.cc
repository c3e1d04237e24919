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

#include "kwspot/phonetics.h"

#include <algorithm>
#include <array>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "kwspot/error.h"
#include "kwspot/io_util.h"

namespace kwspot {

namespace {

// Two-letter initials first so the scan is longest-match.
constexpr std::array<std::string_view, 23> kInitials = {
    "zh", "ch", "sh", "b", "p", "m", "f", "d", "t", "n", "l", "g",
    "k",  "h",  "j",  "q", "x", "r", "z", "c", "s", "y", "w"};

double GroupCost(const std::vector<ConfusionGroup>& groups,
                 const std::string& a, const std::string& b, double fallback) {
  if (a == b) return 0.0;
  double best = fallback;
  for (const auto& g : groups) {
    bool has_a = std::find(g.members.begin(), g.members.end(), a) !=
                 g.members.end();
    bool has_b = std::find(g.members.begin(), g.members.end(), b) !=
                 g.members.end();
    if (has_a && has_b) best = std::min(best, g.cost);
  }
  return best;
}

std::vector<ConfusionGroup> ParseGroups(
    const boost::property_tree::ptree& section) {
  std::vector<ConfusionGroup> groups;
  for (const auto& [key, value] : section) {
    ConfusionGroup g;
    for (auto& m : SplitString(key, ',')) {
      std::string_view t = Trim(m);
      if (!t.empty()) g.members.emplace_back(t);
    }
    g.cost = ParseDouble(value.data());
    if (g.members.size() < 2 || g.cost < 0.0) {
      throw Error(ErrorCode::kBadFormat, "bad confusion group '" + key + "'");
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace

std::string Syllable::ToString() const {
  return initial + final + std::to_string(tone);
}

Syllable ParseSyllable(std::string_view s) {
  if (s.empty() || s.back() < '0' || s.back() > '4') {
    throw Error(ErrorCode::kBadSyllable,
                "'" + std::string(s) + "' has no tone digit 0-4");
  }
  Syllable syl;
  syl.tone = s.back() - '0';
  std::string_view body = s.substr(0, s.size() - 1);
  for (std::string_view ini : kInitials) {
    if (body.substr(0, ini.size()) == ini) {
      syl.initial = std::string(ini);
      break;
    }
  }
  syl.final = std::string(body.substr(syl.initial.size()));
  if (syl.final.empty()) {
    throw Error(ErrorCode::kBadSyllable,
                "'" + std::string(s) + "' has an empty final");
  }
  return syl;
}

CostTable CostTable::Default() {
  CostTable t;
  t.initial_groups = {{{"zh", "z"}, 0.5},
                      {{"ch", "c"}, 0.5},
                      {{"sh", "s"}, 0.5},
                      {{"n", "l"}, 0.5},
                      {{"f", "h"}, 0.5}};
  t.final_groups = {
      {{"in", "ing"}, 0.5}, {{"en", "eng"}, 0.5}, {{"an", "ang"}, 0.5}};
  return t;
}

double CostTable::InitialCost(const std::string& a,
                              const std::string& b) const {
  return GroupCost(initial_groups, a, b, substitution_cost);
}

double CostTable::FinalCost(const std::string& a, const std::string& b) const {
  return GroupCost(final_groups, a, b, substitution_cost);
}

CostTable LoadCostTable(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kBadFormat, e.what());
  }
  CostTable t = CostTable::Default();
  if (auto s = tree.get_child_optional("initial_groups")) {
    t.initial_groups = ParseGroups(*s);
  }
  if (auto s = tree.get_child_optional("final_groups")) {
    t.final_groups = ParseGroups(*s);
  }
  if (auto s = tree.get_child_optional("costs")) {
    for (const auto& [key, value] : *s) {
      double v = ParseDouble(value.data());
      if (v < 0.0) throw Error(ErrorCode::kBadFormat, "negative cost " + key);
      if (key == "tone") {
        t.tone_cost = v;
      } else if (key == "substitution") {
        t.substitution_cost = v;
      } else if (key == "indel") {
        t.indel_cost = v;
      } else {
        throw Error(ErrorCode::kBadFormat, "unknown cost key " + key);
      }
    }
  }
  return t;
}

double SyllableDistance(const Syllable& a, const Syllable& b,
                        const CostTable& costs) {
  return costs.InitialCost(a.initial, b.initial) +
         costs.FinalCost(a.final, b.final) +
         (a.tone != b.tone ? costs.tone_cost : 0.0);
}

double PhraseDistance(std::span<const Syllable> a, std::span<const Syllable> b,
                      const CostTable& costs) {
  const size_t n = a.size(), m = b.size();
  if (n == 0 && m == 0) return 0.0;
  std::vector<double> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j * costs.indel_cost;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i * costs.indel_cost;
    for (size_t j = 1; j <= m; ++j) {
      double sub = std::min(SyllableDistance(a[i - 1], b[j - 1], costs),
                            costs.substitution_cost);
      cur[j] = std::min({prev[j - 1] + sub, prev[j] + costs.indel_cost,
                         cur[j - 1] + costs.indel_cost});
    }
    std::swap(prev, cur);
  }
  return prev[m] / static_cast<double>(std::max(n, m));
}

}  // namespace kwspot
