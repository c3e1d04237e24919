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

#include "kwspot/eval.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "kwspot/error.h"
#include "kwspot/io_util.h"

namespace kwspot {

namespace {

using GroupKey = std::pair<std::string, std::string>;

bool Matches(const Hit& hit, const RefOccurrence& ref, const EvalConfig& cfg) {
  if (cfg.overlap == OverlapRule::kMidpoint) {
    double mid = 0.5 * (hit.start_s + hit.end_s);
    return mid >= ref.start_s && mid <= ref.end_s;
  }
  double overlap = std::min(hit.end_s, ref.end_s) -
                   std::max(hit.start_s, ref.start_s);
  double len = ref.end_s - ref.start_s;
  return overlap > 0.0 && overlap >= cfg.min_overlap_fraction * len;
}

}  // namespace

std::vector<RefOccurrence> ParseRefs(std::string_view text) {
  std::vector<RefOccurrence> refs;
  int line_no = 0;
  for (const auto& raw : SplitString(text, '\n')) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = SplitString(line, '\t');
    if (f.size() != 4) {
      throw Error(ErrorCode::kBadFormat,
                  "reference line " + std::to_string(line_no) +
                      ": need utt_id, kw_id, start_s, end_s");
    }
    RefOccurrence r{f[0], f[1], ParseDouble(f[2]), ParseDouble(f[3])};
    if (!(r.start_s < r.end_s)) {
      throw Error(ErrorCode::kBadFormat,
                  "reference line " + std::to_string(line_no) +
                      ": start_s must be < end_s");
    }
    refs.push_back(std::move(r));
  }
  return refs;
}

std::string FormatRefs(const std::vector<RefOccurrence>& refs) {
  std::ostringstream out;
  for (const auto& r : refs) {
    out << r.utt_id << '\t' << r.kw_id << '\t' << FormatFixed(r.start_s)
        << '\t' << FormatFixed(r.end_s) << '\n';
  }
  return out.str();
}

HitAlignment AlignHits(const std::vector<Hit>& hits,
                       const std::vector<RefOccurrence>& refs,
                       const EvalConfig& cfg) {
  std::map<GroupKey, std::vector<size_t>> hit_groups, ref_groups;
  for (size_t i = 0; i < hits.size(); ++i) {
    if (hits[i].decision) {
      hit_groups[{hits[i].utt_id, hits[i].kw_id}].push_back(i);
    }
  }
  for (size_t i = 0; i < refs.size(); ++i) {
    ref_groups[{refs[i].utt_id, refs[i].kw_id}].push_back(i);
  }

  HitAlignment out;
  std::vector<bool> ref_used(refs.size(), false);
  for (auto& [key, idx] : hit_groups) {
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
      const Hit& x = hits[a];
      const Hit& y = hits[b];
      return std::tie(y.norm_score, x.start_s, x.end_s, a) <
             std::tie(x.norm_score, y.start_s, y.end_s, b);
    });
    auto rg = ref_groups.find(key);
    std::vector<size_t> candidates;
    if (rg != ref_groups.end()) {
      candidates = rg->second;
      std::sort(candidates.begin(), candidates.end(), [&](size_t a, size_t b) {
        return std::tie(refs[a].start_s, refs[a].end_s, a) <
               std::tie(refs[b].start_s, refs[b].end_s, b);
      });
    }
    for (size_t h : idx) {
      bool matched = false;
      for (size_t r : candidates) {
        if (!ref_used[r] && Matches(hits[h], refs[r], cfg)) {
          ref_used[r] = true;
          out.true_positives.emplace_back(h, r);
          matched = true;
          break;
        }
      }
      if (!matched) out.false_alarms.push_back(h);
    }
  }
  for (size_t r = 0; r < refs.size(); ++r) {
    if (!ref_used[r]) out.misses.push_back(r);
  }
  std::sort(out.true_positives.begin(), out.true_positives.end());
  std::sort(out.false_alarms.begin(), out.false_alarms.end());
  return out;
}

F1Score ComputeF1(size_t tp, size_t fp, size_t fn) {
  F1Score s;
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / (tp + fn);
  if (s.precision + s.recall > 0) {
    s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

AtwvResult ComputeAtwv(const std::vector<Hit>& hits,
                       const std::vector<RefOccurrence>& refs,
                       const HitAlignment& alignment, const EvalConfig& cfg) {
  std::map<std::string, KeywordTwv> per_kw;
  auto entry = [&](const std::string& kw) -> KeywordTwv& {
    auto& e = per_kw[kw];
    e.kw_id = kw;
    return e;
  };
  for (const auto& r : refs) entry(r.kw_id).n_true++;
  for (const auto& [h, r] : alignment.true_positives) {
    entry(hits[h].kw_id).n_correct++;
  }
  for (size_t h : alignment.false_alarms) entry(hits[h].kw_id).n_false_alarm++;

  AtwvResult result;
  double sum = 0.0;
  int scored = 0;
  for (auto& [kw, e] : per_kw) {
    e.n_miss = e.n_true - e.n_correct;
    if (e.n_true > 0) {
      const double trials = cfg.total_speech_s - e.n_true;
      if (!(trials > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "total_speech_s must exceed the reference count of " + kw);
      }
      const double p_miss = static_cast<double>(e.n_miss) / e.n_true;
      const double p_fa = e.n_false_alarm / trials;
      e.twv = 1.0 - p_miss - cfg.atwv_beta * p_fa;
      sum += *e.twv;
      ++scored;
    } else {
      result.unscored_false_alarms += e.n_false_alarm;
    }
    result.keywords.push_back(e);
  }
  if (scored == 0) {
    throw Error(ErrorCode::kNoScorableKeywords,
                "no keyword has a reference occurrence");
  }
  result.atwv = sum / scored;
  return result;
}

EvalReport Evaluate(const std::vector<Hit>& hits,
                    const std::vector<RefOccurrence>& refs,
                    const EvalConfig& cfg, int sweep_points) {
  EvalReport report;
  HitAlignment al = AlignHits(hits, refs, cfg);
  report.tp = al.true_positives.size();
  report.fp = al.false_alarms.size();
  report.fn = al.misses.size();
  report.f1 = ComputeF1(report.tp, report.fp, report.fn);
  report.atwv = ComputeAtwv(hits, refs, al, cfg);

  if (!hits.empty() && sweep_points > 0) {
    auto [lo, hi] = std::minmax_element(
        hits.begin(), hits.end(),
        [](const Hit& a, const Hit& b) { return a.norm_score < b.norm_score; });
    const double min_s = lo->norm_score, max_s = hi->norm_score;
    std::vector<Hit> redecided = hits;
    for (int i = 0; i < sweep_points; ++i) {
      SweepPoint p;
      p.threshold = sweep_points == 1
                        ? min_s
                        : min_s + (max_s - min_s) * i / (sweep_points - 1);
      for (auto& h : redecided) h.decision = h.norm_score >= p.threshold;
      HitAlignment a = AlignHits(redecided, refs, cfg);
      p.f1 = ComputeF1(a.true_positives.size(), a.false_alarms.size(),
                       a.misses.size());
      p.atwv = ComputeAtwv(redecided, refs, a, cfg).atwv;
      report.sweep.push_back(p);
    }
  }
  return report;
}

std::string EvalReportToJson(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["precision"] = report.f1.precision;
  j["recall"] = report.f1.recall;
  j["f1"] = report.f1.f1;
  j["atwv"] = report.atwv.atwv;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["unscored_false_alarms"] = report.atwv.unscored_false_alarms;
  auto kws = nlohmann::ordered_json::array();
  for (const auto& k : report.atwv.keywords) {
    nlohmann::ordered_json o;
    o["kw_id"] = k.kw_id;
    o["n_true"] = k.n_true;
    o["n_correct"] = k.n_correct;
    o["n_false_alarm"] = k.n_false_alarm;
    o["n_miss"] = k.n_miss;
    o["twv"] = k.twv ? nlohmann::ordered_json(*k.twv) : nullptr;
    kws.push_back(std::move(o));
  }
  j["keywords"] = std::move(kws);
  auto sweep = nlohmann::ordered_json::array();
  for (const auto& p : report.sweep) {
    sweep.push_back({{"threshold", p.threshold},
                     {"precision", p.f1.precision},
                     {"recall", p.f1.recall},
                     {"f1", p.f1.f1},
                     {"atwv", p.atwv}});
  }
  j["sweep"] = std::move(sweep);
  return j.dump(2);
}

}  // namespace kwspot
