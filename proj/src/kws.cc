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

#include "kwspot/kws.h"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "kwspot/error.h"
#include "kwspot/io_util.h"

namespace kwspot {

Keyword MakeKeyword(const std::string& id, const std::string& text,
                    const UnitSet& chars, const Lexicon& lexicon,
                    const UnitSet& sylls) {
  Keyword kw;
  kw.id = id;
  kw.text = text;
  kw.char_units = TokenizeChars(text, chars);
  kw.syll_units = Syllabify(text, lexicon, sylls);
  if (kw.char_units.empty()) {
    throw Error(ErrorCode::kInvalidKeyword, "keyword '" + id + "' is empty");
  }
  return kw;
}

std::vector<Keyword> LoadKeywords(const std::filesystem::path& path,
                                  const UnitSet& chars, const Lexicon& lexicon,
                                  const UnitSet& sylls) {
  std::vector<Keyword> keywords;
  int line_no = 0;
  for (const auto& raw : ReadLines(path)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = SplitString(line, '\t');
    if (fields.size() != 2) {
      throw Error(ErrorCode::kBadFormat, path.string() + ":" +
                                             std::to_string(line_no) +
                                             ": expected kw_id<TAB>text");
    }
    keywords.push_back(MakeKeyword(std::string(Trim(fields[0])),
                                   std::string(Trim(fields[1])), chars,
                                   lexicon, sylls));
  }
  return keywords;
}

const char* MatchStageName(MatchStage stage) {
  switch (stage) {
    case MatchStage::kChar: return "char";
    case MatchStage::kSyllable: return "syllable";
    case MatchStage::kFuzzy: return "fuzzy";
  }
  return "char";
}

std::vector<TokenMatch> MatchExact(const std::vector<NBestEntry>& nbest,
                                   const UnitSeq& units) {
  std::vector<TokenMatch> matches;
  if (units.empty()) return matches;
  for (size_t r = 0; r < nbest.size(); ++r) {
    const UnitSeq& toks = nbest[r].tokens;
    auto it = toks.begin();
    while (true) {
      it = std::search(it, toks.end(), units.begin(), units.end());
      if (it == toks.end()) break;
      int begin = static_cast<int>(it - toks.begin());
      matches.push_back({static_cast<int>(r), begin,
                         begin + static_cast<int>(units.size()), 0.0});
      ++it;
    }
  }
  return matches;
}

PhoneticIndex::PhoneticIndex(const UnitSet& chars, const Lexicon& lexicon,
                             const UnitSet& sylls, CostTable costs)
    : by_char_(chars.size()), known_(chars.size(), false),
      costs_(std::move(costs)) {
  auto map = CharToSyllableMap(chars, lexicon, sylls);
  for (UnitId c = 1; c < chars.size(); ++c) {
    if (map[c] < 0) continue;
    by_char_[c] = ParseSyllable(sylls.Symbol(map[c]));
    known_[c] = true;
  }
}

const Syllable& PhoneticIndex::CharSyllable(UnitId ch) const {
  if (ch <= 0 || ch >= static_cast<UnitId>(known_.size()) || !known_[ch]) {
    throw Error(ErrorCode::kOutOfVocabulary,
                "no pronunciation for character unit " + std::to_string(ch));
  }
  return by_char_[ch];
}

std::vector<Syllable> PhoneticIndex::CharSyllables(
    std::span<const UnitId> chars) const {
  std::vector<Syllable> out;
  out.reserve(chars.size());
  for (UnitId c : chars) out.push_back(CharSyllable(c));
  return out;
}

std::vector<TokenMatch> MatchFuzzy(const std::vector<NBestEntry>& nbest,
                                   const Keyword& kw,
                                   const PhoneticIndex& phonetics,
                                   double threshold) {
  std::vector<TokenMatch> matches;
  const auto kw_syl = phonetics.CharSyllables(kw.char_units);
  const size_t width = kw.char_units.size();
  for (size_t r = 0; r < nbest.size(); ++r) {
    const UnitSeq& toks = nbest[r].tokens;
    if (toks.size() < width) continue;
    for (size_t i = 0; i + width <= toks.size(); ++i) {
      std::span<const UnitId> window(toks.data() + i, width);
      if (std::equal(window.begin(), window.end(), kw.char_units.begin())) {
        continue;
      }
      double d = PhraseDistance(phonetics.CharSyllables(window), kw_syl,
                                phonetics.costs());
      if (d < threshold) {
        matches.push_back({static_cast<int>(r), static_cast<int>(i),
                           static_cast<int>(i + width), d});
      }
    }
  }
  return matches;
}

double ScoreCtc(const Posteriorgram& pg, const UnitSeq& units, int win_start,
                int win_end) {
  if (win_start < 0 || win_end > pg.num_frames() || win_start > win_end) {
    throw Error(ErrorCode::kInvalidArgument, "window outside posteriorgram");
  }
  return CtcForwardLogProb(pg.logp.middleRows(win_start, win_end - win_start),
                           units);
}

FrameWindow LocateWindow(std::span<const TokenSpan> matched, int pad,
                         int num_frames) {
  FrameWindow w;
  if (matched.empty()) return w;
  w.start = std::max(0, matched.front().start_frame - pad);
  w.end = std::min(num_frames, matched.back().end_frame + pad);
  return w;
}

std::vector<Hit> MergeStages(std::vector<Hit> hits) {
  auto group_key = [](const Hit& h) { return std::tie(h.utt_id, h.kw_id); };
  std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
    if (group_key(a) != group_key(b)) return group_key(a) < group_key(b);
    if (a.norm_score != b.norm_score) return a.norm_score > b.norm_score;
    return std::tie(a.stage, a.hyp_rank, a.start_frame, a.end_frame) <
           std::tie(b.stage, b.hyp_rank, b.start_frame, b.end_frame);
  });
  std::vector<Hit> kept;
  size_t group_begin = 0;
  for (auto& h : hits) {
    if (!kept.empty() && group_key(kept.back()) != group_key(h)) {
      group_begin = kept.size();
    }
    bool overlaps = false;
    for (size_t k = group_begin; k < kept.size() && !overlaps; ++k) {
      overlaps = group_key(kept[k]) == group_key(h) &&
                 std::min(kept[k].end_frame, h.end_frame) >
                     std::max(kept[k].start_frame, h.start_frame);
    }
    if (!overlaps) kept.push_back(std::move(h));
  }
  std::sort(kept.begin(), kept.end(), [](const Hit& a, const Hit& b) {
    return std::tie(a.utt_id, a.kw_id, a.start_frame, a.end_frame) <
           std::tie(b.utt_id, b.kw_id, b.start_frame, b.end_frame);
  });
  return kept;
}

std::vector<Hit> Detect(const StageInput& char_stage,
                        const StageInput& syll_stage,
                        const std::vector<Keyword>& keywords,
                        const PhoneticIndex& phonetics, const KwsConfig& cfg) {
  std::vector<Hit> hits;
  auto add = [&](const StageInput& in, const TokenMatch& m,
                 const Keyword& kw, const UnitSeq& units, MatchStage stage) {
    const auto& spans = (*in.nbest)[m.hyp_rank].spans;
    std::span<const TokenSpan> matched(spans.data() + m.begin,
                                       static_cast<size_t>(m.end - m.begin));
    FrameWindow w = LocateWindow(matched, cfg.window_pad, in.pg->num_frames());
    double raw = 0.0;
    try {
      raw = ScoreCtc(*in.pg, units, w.start, w.end);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAlignmentInfeasible) throw;
      return;  // cannot be scored, so it cannot be a detection
    }
    Hit hit;
    hit.utt_id = in.pg->utt_id;
    hit.kw_id = kw.id;
    hit.stage = stage;
    hit.start_frame = matched.front().start_frame;
    hit.end_frame = matched.back().end_frame;
    hit.start_s = hit.start_frame * in.pg->frame_period_s;
    hit.end_s = hit.end_frame * in.pg->frame_period_s;
    hit.raw_log_score = raw;
    hit.norm_score = cfg.length_normalize
                         ? NormalizeScore(raw, static_cast<int>(units.size()))
                         : raw;
    hit.hyp_rank = m.hyp_rank;
    hits.push_back(std::move(hit));
  };

  const bool has_char = char_stage.pg != nullptr && char_stage.nbest != nullptr;
  const bool has_syll = syll_stage.pg != nullptr && syll_stage.nbest != nullptr;
  for (const auto& kw : keywords) {
    if (has_char && cfg.char_stage) {
      for (const auto& m : MatchExact(*char_stage.nbest, kw.char_units)) {
        add(char_stage, m, kw, kw.char_units, MatchStage::kChar);
      }
    }
    if (has_syll && cfg.syllable_stage) {
      for (const auto& m : MatchExact(*syll_stage.nbest, kw.syll_units)) {
        add(syll_stage, m, kw, kw.syll_units, MatchStage::kSyllable);
      }
    }
    if (has_char && cfg.fuzzy_stage) {
      for (const auto& m : MatchFuzzy(*char_stage.nbest, kw, phonetics,
                                      cfg.fuzzy_threshold)) {
        add(char_stage, m, kw, kw.char_units, MatchStage::kFuzzy);
      }
    }
  }
  auto merged = MergeStages(std::move(hits));
  for (auto& h : merged) h.decision = h.norm_score >= cfg.decision_threshold;
  return merged;
}

std::string FormatHits(const std::vector<Hit>& hits) {
  std::ostringstream out;
  for (const auto& h : hits) {
    out << h.utt_id << '\t' << h.kw_id << '\t' << FormatFixed(h.start_s) << '\t'
        << FormatFixed(h.end_s) << '\t' << FormatFixed(h.norm_score) << '\t'
        << (h.decision ? 1 : 0) << '\t' << MatchStageName(h.stage) << '\n';
  }
  return out.str();
}

std::vector<Hit> ParseHits(std::string_view text) {
  std::vector<Hit> hits;
  int line_no = 0;
  for (const auto& raw : SplitString(text, '\n')) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = SplitString(line, '\t');
    if (f.size() != 7) {
      throw Error(ErrorCode::kBadFormat,
                  "hit line " + std::to_string(line_no) + ": need 7 fields");
    }
    Hit h;
    h.utt_id = f[0];
    h.kw_id = f[1];
    h.start_s = ParseDouble(f[2]);
    h.end_s = ParseDouble(f[3]);
    h.norm_score = ParseDouble(f[4]);
    h.decision = ParseInt(f[5]) != 0;
    if (f[6] == "char") {
      h.stage = MatchStage::kChar;
    } else if (f[6] == "syllable") {
      h.stage = MatchStage::kSyllable;
    } else if (f[6] == "fuzzy") {
      h.stage = MatchStage::kFuzzy;
    } else {
      throw Error(ErrorCode::kBadFormat, "unknown stage " + f[6]);
    }
    hits.push_back(std::move(h));
  }
  return hits;
}

}  // namespace kwspot
