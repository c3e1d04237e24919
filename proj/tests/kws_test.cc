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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kwspot/error.h"
#include "oracles.h"

namespace kwspot {
namespace {

NBestEntry Hyp(UnitSeq tokens) {
  NBestEntry e;
  e.tokens = std::move(tokens);
  return e;
}

// Six characters: a base, its tone variant, its zh/z variant, and three
// unrelated syllables.
class KwsFixture : public ::testing::Test {
 protected:
  KwsFixture()
      : chars_("chars", UnitKind::kCharacter,
               {"张", "章", "脏", "海", "天", "明"}),
        sylls_("sylls", UnitKind::kSyllable,
               {"zhang1", "zhang4", "zang1", "hai3", "tian1", "ming2"}),
        phonetics_(chars_, MakeLexicon(), sylls_, CostTable::Default()) {}

  static Lexicon MakeLexicon() {
    Lexicon lex;
    lex.Add("张", {"zhang1"});
    lex.Add("章", {"zhang4"});
    lex.Add("脏", {"zang1"});
    lex.Add("海", {"hai3"});
    lex.Add("天", {"tian1"});
    lex.Add("明", {"ming2"});
    return lex;
  }

  Keyword Kw(const std::string& id, const std::string& text) {
    return MakeKeyword(id, text, chars_, MakeLexicon(), sylls_);
  }

  UnitSet chars_;
  UnitSet sylls_;
  PhoneticIndex phonetics_;
};

TEST(MatchExactTest, Examples) {
  std::vector<NBestEntry> nbest = {Hyp({5, 1, 2, 6})};
  auto m = MatchExact(nbest, {1, 2});
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].hyp_rank, 0);
  EXPECT_EQ(m[0].begin, 1);
  EXPECT_EQ(m[0].end, 3);
  EXPECT_TRUE(MatchExact(nbest, {2, 1}).empty());

  nbest = {Hyp({3}), Hyp({1, 2}), Hyp({4}), Hyp({1, 2, 1, 2})};
  m = MatchExact(nbest, {1, 2});
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].hyp_rank, 1);
  EXPECT_EQ(m[1].hyp_rank, 3);
  EXPECT_EQ(m[1].begin, 0);
  EXPECT_EQ(m[2].begin, 2);
}

TEST_F(KwsFixture, KeywordUnits) {
  Keyword kw = Kw("kw1", "张海");
  EXPECT_EQ(kw.char_units, (UnitSeq{1, 4}));
  EXPECT_EQ(kw.syll_units, (UnitSeq{1, 4}));
  EXPECT_THROW(Kw("kw2", ""), Error);
  EXPECT_THROW(Kw("kw3", "张x"), Error);
}

TEST_F(KwsFixture, FuzzyFindsToneVariant) {
  Keyword kw = Kw("kw", "张海");
  std::vector<NBestEntry> nbest = {Hyp({5, 2, 4, 6})};  // 天章海明
  auto m = MatchFuzzy(nbest, kw, phonetics_, 0.5);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].begin, 1);
  EXPECT_EQ(m[0].end, 3);
  EXPECT_NEAR(m[0].distance, 0.1, 1e-12);
  EXPECT_LE(m[0].distance, 0.2);

  nbest = {Hyp({3, 4})};  // 脏海: zh/z, distance 0.25
  m = MatchFuzzy(nbest, kw, phonetics_, 0.5);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_NEAR(m[0].distance, 0.25, 1e-12);
  EXPECT_TRUE(MatchFuzzy(nbest, kw, phonetics_, 0.25).empty());
}

TEST_F(KwsFixture, FuzzyEdgeCases) {
  Keyword kw = Kw("kw", "张海");
  std::vector<NBestEntry> nbest = {Hyp({2, 4}), Hyp({1, 4}), Hyp({5, 6})};
  EXPECT_TRUE(MatchFuzzy(nbest, kw, phonetics_, 0.0).empty());
  auto m = MatchFuzzy(nbest, kw, phonetics_, 0.5);
  ASSERT_EQ(m.size(), 1u);  // exact match in rank 1 is excluded
  EXPECT_EQ(m[0].hyp_rank, 0);
  EXPECT_TRUE(MatchFuzzy({Hyp({1})}, kw, phonetics_, 1.0).empty());
}

TEST(ScoreCtcTest, TwoFrameExample) {
  auto pg = testing::MakePosteriorgram({{0.6, 0.4}, {0.5, 0.5}});
  EXPECT_NEAR(ScoreCtc(pg, {1}, 0, 2), std::log(0.7), 1e-7);
  try {
    ScoreCtc(pg, {1, 1}, 0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlignmentInfeasible);
  }
  EXPECT_THROW(ScoreCtc(pg, {1}, 1, 3), Error);
}

TEST(ScoreCtcTest, MatchesPathSumOnEveryWindow) {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int frames = 1; frames <= 6; ++frames) {
    for (int units = 2; units <= 4; ++units) {
      auto pg = testing::RandomPosteriorgram(frames, units, &rng);
      for (int s = 0; s < frames; ++s) {
        for (int e = s + 1; e <= frames; ++e) {
          for (const auto& [labels, lp] :
               testing::BruteForceLabelScores(pg, s, e)) {
            if (labels.empty()) continue;
            EXPECT_TRUE(testing::RelClose(ScoreCtc(pg, labels, s, e), lp, 1e-9));
            ++checked;
          }
        }
      }
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(ScoreCtcTest, OneHotWindowIsCertain) {
  UnitSet set = testing::LetterUnits(4);
  SynthConfig synth;
  auto pg = SynthGenerate({1, 2, 3}, set, synth);
  EXPECT_NEAR(ScoreCtc(pg, {1, 2, 3}, 0, pg.num_frames()), 0.0, 1e-3);
}

TEST(LocateWindowTest, PadsAndClamps) {
  std::vector<TokenSpan> spans(2);
  spans[0].start_frame = 10;
  spans[0].end_frame = 14;
  spans[1].start_frame = 19;
  spans[1].end_frame = 23;
  FrameWindow w = LocateWindow(spans, 0, 40);
  EXPECT_EQ(w.start, 10);
  EXPECT_EQ(w.end, 23);
  w = LocateWindow(spans, 5, 40);
  EXPECT_EQ(w.start, 5);
  EXPECT_EQ(w.end, 28);
  w = LocateWindow(spans, 100, 40);
  EXPECT_EQ(w.start, 0);
  EXPECT_EQ(w.end, 40);
}

TEST(LocateWindowTest, OneHotAlignmentMatchesLayout) {
  UnitSet set = testing::LetterUnits(4);
  SynthConfig synth;
  UnitSeq tr{3, 1, 2, 2};
  auto pg = SynthGenerate(tr, set, synth);
  auto layout = SynthLayout(tr, synth);
  auto spans = AlignViterbi(pg, tr).spans;
  for (int delta : {0, 3}) {
    FrameWindow w = LocateWindow(std::span(spans).subspan(1, 2), delta,
                                 pg.num_frames());
    EXPECT_EQ(w.start, layout[1].start_frame - delta);
    EXPECT_EQ(w.end, layout[2].end_frame + delta);
  }
}

TEST(NormalizeTest, Examples) {
  EXPECT_EQ(NormalizeScore(-6.0, 3), -2.0);
  EXPECT_EQ(NormalizeScore(-1.7, 1), -1.7);
  EXPECT_EQ(NormalizeScore(2 * -0.4, 2), NormalizeScore(4 * -0.4, 4));
}

Hit MakeHit(std::string kw, MatchStage stage, int start, int end,
            double score) {
  Hit h;
  h.utt_id = "u";
  h.kw_id = std::move(kw);
  h.stage = stage;
  h.start_frame = start;
  h.end_frame = end;
  h.norm_score = score;
  return h;
}

TEST(MergeStagesTest, Examples) {
  auto merged = MergeStages({MakeHit("k", MatchStage::kChar, 10, 20, -1.5),
                             MakeHit("k", MatchStage::kSyllable, 12, 22, -1.2)});
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].stage, MatchStage::kSyllable);

  merged = MergeStages({MakeHit("k", MatchStage::kChar, 10, 20, -1.5),
                        MakeHit("k", MatchStage::kChar, 20, 30, -1.2)});
  EXPECT_EQ(merged.size(), 2u);

  merged = MergeStages({MakeHit("k", MatchStage::kChar, 10, 20, -1.5),
                        MakeHit("j", MatchStage::kChar, 10, 20, -1.2)});
  EXPECT_EQ(merged.size(), 2u);

  merged = MergeStages({MakeHit("k", MatchStage::kFuzzy, 1, 2, -3.0)});
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].norm_score, -3.0);
}

TEST(MergeStagesTest, IdempotentAndOverlapFree) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Hit> hits;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      const int start = static_cast<int>(rng() % 50);
      hits.push_back(MakeHit(rng() % 2 ? "a" : "b",
                             static_cast<MatchStage>(rng() % 3), start,
                             start + 1 + static_cast<int>(rng() % 10),
                             -static_cast<double>(rng() % 100) / 10.0));
    }
    auto once = MergeStages(hits);
    auto twice = MergeStages(once);
    ASSERT_EQ(once.size(), twice.size());
    for (size_t i = 0; i < once.size(); ++i) {
      EXPECT_EQ(once[i].kw_id, twice[i].kw_id);
      EXPECT_EQ(once[i].start_frame, twice[i].start_frame);
      EXPECT_EQ(once[i].norm_score, twice[i].norm_score);
      for (size_t j = i + 1; j < once.size(); ++j) {
        if (once[i].kw_id != once[j].kw_id) continue;
        EXPECT_LE(std::min(once[i].end_frame, once[j].end_frame),
                  std::max(once[i].start_frame, once[j].start_frame));
      }
    }
    // The best hit of each keyword always survives.
    for (const auto& h : hits) {
      bool dominated = false;
      for (const auto& k : once) {
        dominated |= k.kw_id == h.kw_id && k.norm_score >= h.norm_score &&
                     std::min(k.end_frame, h.end_frame) >
                         std::max(k.start_frame, h.start_frame);
      }
      EXPECT_TRUE(dominated);
    }
  }
}

class DetectTest : public KwsFixture {
 protected:
  std::vector<Hit> Run(const std::string& text, const KwsConfig& cfg,
                       double noise = 0.0, uint64_t seed = 1) {
    SynthConfig synth;
    synth.noise = noise;
    synth.seed = seed;
    const Lexicon lex = MakeLexicon();
    char_pg_ = SynthGenerate(TokenizeChars(text, chars_), chars_, synth, "u1");
    syll_pg_ = SynthGenerate(Syllabify(text, lex, sylls_), sylls_, synth, "u1");
    BeamConfig beam;
    beam.lm_weight = 0.0;
    char_nbest_ = PrefixBeamSearch(char_pg_, chars_, nullptr, nullptr, beam);
    syll_nbest_ = PrefixBeamSearch(syll_pg_, sylls_, nullptr, nullptr, beam);
    return Detect({&char_pg_, &char_nbest_}, {&syll_pg_, &syll_nbest_},
                  keywords_, phonetics_, cfg);
  }

  std::vector<Keyword> keywords_ = {Kw("kw1", "张海"), Kw("kw2", "天明")};
  Posteriorgram char_pg_, syll_pg_;
  std::vector<NBestEntry> char_nbest_, syll_nbest_;
};

TEST_F(DetectTest, CleanUtteranceWithKeyword) {
  KwsConfig cfg;
  auto hits = Run("明张海天", cfg);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].kw_id, "kw1");
  EXPECT_TRUE(hits[0].decision);
  SynthConfig synth;
  auto layout = SynthLayout({6, 1, 4, 5}, synth);
  EXPECT_EQ(hits[0].start_frame, layout[1].start_frame);
  EXPECT_EQ(hits[0].end_frame, layout[2].end_frame);
  EXPECT_NEAR(hits[0].start_s, layout[1].start_frame * kDefaultFramePeriod,
              1e-12);
  EXPECT_NEAR(hits[0].norm_score, hits[0].raw_log_score / 2, 1e-12);
  EXPECT_GT(hits[0].norm_score, -0.01);
}

TEST_F(DetectTest, CleanUtteranceWithoutKeyword) {
  EXPECT_TRUE(Run("明天海", KwsConfig()).empty());
}

TEST_F(DetectTest, ToneVariantFoundByFuzzyStage) {
  KwsConfig cfg;
  cfg.syllable_stage = false;
  auto hits = Run("章海", cfg);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].stage, MatchStage::kFuzzy);
  cfg.fuzzy_stage = false;
  EXPECT_TRUE(Run("章海", cfg).empty());
}

TEST_F(DetectTest, ThresholdMonotone) {
  std::vector<Hit> hits = Run("天明张海脏海章海天明", KwsConfig(), 0.4, 9);
  ASSERT_FALSE(hits.empty());
  size_t prev = hits.size() + 1;
  for (double theta = -20.0; theta <= 1.0; theta += 0.25) {
    size_t accepted = 0;
    for (const auto& h : hits) accepted += h.norm_score >= theta;
    EXPECT_LE(accepted, prev);
    prev = accepted;
    KwsConfig cfg;
    cfg.decision_threshold = theta;
    size_t decided = 0;
    for (const auto& h : Run("天明张海脏海章海天明", cfg, 0.4, 9)) {
      decided += h.decision;
    }
    EXPECT_EQ(decided, accepted);
  }
}

TEST(HitsTsvTest, RoundTrip) {
  Hit h = MakeHit("kw9", MatchStage::kSyllable, 3, 9, -1.234567);
  h.start_s = 0.03;
  h.end_s = 0.09;
  h.decision = true;
  Hit g = MakeHit("kw1", MatchStage::kFuzzy, 3, 9, -7.5);
  const std::string text = FormatHits({h, g});
  auto back = ParseHits(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].kw_id, "kw9");
  EXPECT_EQ(back[0].stage, MatchStage::kSyllable);
  EXPECT_NEAR(back[0].start_s, 0.03, 1e-6);
  EXPECT_NEAR(back[0].norm_score, -1.234567, 1e-6);
  EXPECT_TRUE(back[0].decision);
  EXPECT_FALSE(back[1].decision);
  EXPECT_EQ(back[1].stage, MatchStage::kFuzzy);
  EXPECT_EQ(FormatHits(back), text);
  EXPECT_THROW(ParseHits("u\tk\t1\t2\n"), Error);
  EXPECT_THROW(ParseHits("u\tk\t1\t2\t-1\t1\tword\n"), Error);
}

}  // namespace
}  // namespace kwspot
