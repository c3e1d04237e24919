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

#include "kwspot/pipeline.h"

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <set>

#include "json.hpp"
#include "kwspot/error.h"
#include "kwspot/io_util.h"
#include "oracles.h"

namespace kwspot {
namespace {

void Write(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

ToyCorpusConfig SmallToy() {
  ToyCorpusConfig tc;
  tc.seed = 5;
  tc.num_utterances = 24;
  tc.num_keywords = 8;
  tc.plants_per_keyword = 2;
  tc.num_lm_sentences = 500;
  return tc;
}

TEST(PipelineConfigTest, FormatLoadRoundTrip) {
  testing::TempDir dir;
  PipelineConfig cfg;
  cfg.paths.chars = "chars.units";
  cfg.paths.keywords = "sub/kw.tsv";
  cfg.beam.beam_size = 7;
  cfg.beam.lm_weight = 0.1;
  cfg.beam.bias_enabled = false;
  cfg.bias.beta = 2.5;
  cfg.bias.award = BiasAward::kPerOccurrence;
  cfg.kws.fuzzy_threshold = 0.3;
  cfg.kws.fuzzy_stage = false;
  cfg.eval.overlap = OverlapRule::kMinOverlap;
  cfg.eval.atwv_beta = 999.9;
  cfg.synth.noise = 0.3;
  cfg.run.seed = 123456789012345ULL;
  cfg.run.jobs = 3;
  Write(dir / "a.ini", FormatPipelineConfig(cfg));
  PipelineConfig back = LoadPipelineConfig(dir / "a.ini");
  EXPECT_EQ(back.paths.chars, dir / "chars.units");
  EXPECT_EQ(back.paths.keywords, dir / "sub/kw.tsv");
  EXPECT_TRUE(back.paths.cost_table.empty());
  EXPECT_EQ(back.beam.beam_size, 7);
  EXPECT_EQ(back.beam.lm_weight, 0.1);
  EXPECT_FALSE(back.beam.bias_enabled);
  EXPECT_EQ(back.bias.beta, 2.5);
  EXPECT_EQ(back.bias.award, BiasAward::kPerOccurrence);
  EXPECT_EQ(back.kws.fuzzy_threshold, 0.3);
  EXPECT_FALSE(back.kws.fuzzy_stage);
  EXPECT_EQ(back.eval.overlap, OverlapRule::kMinOverlap);
  EXPECT_EQ(back.eval.atwv_beta, 999.9);
  EXPECT_EQ(back.synth.noise, 0.3);
  EXPECT_EQ(back.run.seed, 123456789012345ULL);
  EXPECT_EQ(back.run.jobs, 3);
  Write(dir / "b.ini", FormatPipelineConfig(back));
  EXPECT_EQ(FormatPipelineConfig(LoadPipelineConfig(dir / "b.ini")),
            FormatPipelineConfig(back));
}

TEST(PipelineConfigTest, PartialFileKeepsDefaults) {
  testing::TempDir dir;
  Write(dir / "c.ini", "[beam]\nbeam_size = 4\n");
  PipelineConfig cfg = LoadPipelineConfig(dir / "c.ini");
  EXPECT_EQ(cfg.beam.beam_size, 4);
  EXPECT_EQ(cfg.beam.nbest, 10);
  EXPECT_EQ(cfg.bias.alpha, 1.0);
  EXPECT_EQ(cfg.bias.beta, 4.0);
  EXPECT_EQ(cfg.kws.fuzzy_threshold, 0.5);
}

TEST(PipelineConfigTest, RejectsBadFiles) {
  testing::TempDir dir;
  for (const std::string text :
       {"[beam]\nbeams = 4\n", "[nope]\nx = 1\n", "[bias]\naward = some\n",
        "[beam]\nbeam_size = four\n", "[eval]\noverlap = most\n",
        "[kws]\nfuzzy_threshold = 2\n", "[bias]\nchunk_len = 0\n"}) {
    Write(dir / "bad.ini", text);
    try {
      LoadPipelineConfig(dir / "bad.ini");
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::kBadFormat ||
                  e.code() == ErrorCode::kInvalidArgument)
          << text;
    }
  }
  try {
    LoadPipelineConfig(dir / "missing.ini");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(ParallelForTest, VisitsEveryIndexOnce) {
  for (int jobs : {1, 2, 8}) {
    std::vector<std::atomic<int>> seen(100);
    ParallelFor(100, jobs, [&](int i) { seen[i]++; });
    for (auto& s : seen) EXPECT_EQ(s.load(), 1);
  }
  ParallelFor(0, 4, [](int) { FAIL(); });
}

TEST(ParallelForTest, RethrowsFirstError) {
  std::atomic<int> done{0};
  EXPECT_THROW(ParallelFor(50, 4,
                           [&](int i) {
                             if (i == 17) {
                               throw Error(ErrorCode::kInvalidArgument, "x");
                             }
                             done++;
                           }),
               Error);
  EXPECT_LE(done.load(), 49);
}

TEST(TranscriptsTest, SortedAndUnique) {
  testing::TempDir dir;
  Write(dir / "t.tsv", "u2\tb\nu1\ta\n\n");
  auto t = LoadTranscripts(dir / "t.tsv");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].first, "u1");
  EXPECT_EQ(t[1].second, "b");
  Write(dir / "d.tsv", "u1\ta\nu1\tb\n");
  try {
    LoadTranscripts(dir / "d.tsv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadFormat);
  }
}

TEST(FindReferencesTest, SpansFromLayout) {
  UnitSet chars("c", UnitKind::kCharacter, {"a", "b", "c"});
  UnitSet sylls("s", UnitKind::kSyllable, {"a1", "b1", "c1"});
  Lexicon lex;
  lex.Add("a", {"a1"});
  lex.Add("b", {"b1"});
  lex.Add("c", {"c1"});
  std::vector<Keyword> kws = {MakeKeyword("k1", "ab", chars, lex, sylls),
                              MakeKeyword("k2", "c", chars, lex, sylls)};
  SynthConfig synth;
  UnitSeq tr{1, 2, 3, 1, 2};
  auto layout = SynthLayout(tr, synth);
  auto refs = FindReferences("u", tr, kws, layout, 0.01);
  ASSERT_EQ(refs.size(), 3u);
  std::multiset<std::string> ids;
  for (const auto& r : refs) {
    ids.insert(r.kw_id);
    EXPECT_LT(r.start_s, r.end_s);
  }
  EXPECT_EQ(ids, (std::multiset<std::string>{"k1", "k1", "k2"}));
  for (const auto& r : refs) {
    if (r.kw_id == "k2") {
      EXPECT_NEAR(r.start_s, layout[2].start_frame * 0.01, 1e-12);
      EXPECT_NEAR(r.end_s, layout[2].end_frame * 0.01, 1e-12);
    }
  }
}

class ToyPipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    corpus_ = new ToyCorpus(GenerateToyCorpus(SmallToy()));
    WriteToyWorkspace(*corpus_, 5, 3, dir_->path());
  }
  static void TearDownTestSuite() {
    delete corpus_;
    delete dir_;
  }
  static PipelineConfig Config() {
    return LoadPipelineConfig(dir_->path() / "kwspot.ini");
  }

  static testing::TempDir* dir_;
  static ToyCorpus* corpus_;
};
testing::TempDir* ToyPipelineTest::dir_ = nullptr;
ToyCorpus* ToyPipelineTest::corpus_ = nullptr;

TEST_F(ToyPipelineTest, ResourcesLoad) {
  PipelineConfig cfg = Config();
  Resources res = LoadResources(cfg);
  EXPECT_EQ(res.chars.size(), static_cast<int>(corpus_->chars.size()) + 1);
  EXPECT_EQ(res.keywords.size(), corpus_->keywords.size());
  ASSERT_TRUE(res.char_lm.has_value());
  EXPECT_EQ(res.char_lm->order(), 3);
  EXPECT_FALSE(res.char_confusion.empty());
  cfg.paths.lexicon = dir_->path() / "none.tsv";
  try {
    LoadResources(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST_F(ToyPipelineTest, SynthesisIsDeterministicAcrossJobs) {
  PipelineConfig cfg = Config();
  cfg.synth.noise = 0.3;
  Resources res = LoadResources(cfg);
  cfg.run.jobs = 1;
  SynthCorpus a = SynthesizeCorpus(corpus_->transcripts, res, cfg);
  cfg.run.jobs = 3;
  SynthCorpus b = SynthesizeCorpus(corpus_->transcripts, res, cfg);
  ASSERT_EQ(a.utterances.size(), corpus_->transcripts.size());
  ASSERT_EQ(a.utterances.size(), b.utterances.size());
  for (size_t i = 0; i < a.utterances.size(); ++i) {
    EXPECT_EQ(EncodePosteriorgram(a.utterances[i].char_pg),
              EncodePosteriorgram(b.utterances[i].char_pg));
    EXPECT_EQ(EncodePosteriorgram(a.utterances[i].syll_pg),
              EncodePosteriorgram(b.utterances[i].syll_pg));
  }
  EXPECT_EQ(FormatRefs(a.refs), FormatRefs(b.refs));
  EXPECT_GE(a.refs.size(), corpus_->keywords.size() * 2);
  EXPECT_TRUE(a.skipped.empty());
  EXPECT_GT(a.total_speech_s, 0.0);
  cfg.run.seed = 6;
  SynthCorpus c = SynthesizeCorpus(corpus_->transcripts, res, cfg);
  EXPECT_NE(EncodePosteriorgram(a.utterances[0].char_pg),
            EncodePosteriorgram(c.utterances[0].char_pg));
}

TEST_F(ToyPipelineTest, OutOfVocabularyUtteranceSkipped) {
  PipelineConfig cfg = Config();
  Resources res = LoadResources(cfg);
  auto transcripts = corpus_->transcripts;
  transcripts.emplace_back("zzz", "x");
  SynthCorpus a = SynthesizeCorpus(transcripts, res, cfg);
  EXPECT_EQ(a.utterances.size(), corpus_->transcripts.size());
  ASSERT_EQ(a.skipped.size(), 1u);
  EXPECT_NE(a.skipped[0].find("zzz"), std::string::npos);
}

TEST_F(ToyPipelineTest, CleanLadderIsPerfect) {
  PipelineConfig cfg = Config();
  Resources res = LoadResources(cfg);
  SynthCorpus corpus = SynthesizeCorpus(corpus_->transcripts, res, cfg);
  LadderResult r = RunLadder(corpus, res, cfg, DefaultLadder(cfg.beam.nbest));
  ASSERT_EQ(r.rows.size(), 7u);
  EXPECT_EQ(r.rows[0].name, "greedy");
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.fp, 0u) << row.name;
    EXPECT_EQ(row.fn, 0u) << row.name;
    EXPECT_EQ(row.f1.f1, 1.0) << row.name;
    EXPECT_EQ(row.atwv, 1.0) << row.name;
  }
  auto j = nlohmann::json::parse(LadderReportToJson(r, corpus));
  EXPECT_EQ(j["stages"].size(), 7u);
  EXPECT_EQ(LadderReportToJson(r, corpus),
            LadderReportToJson(RunLadder(corpus, res, cfg,
                                         DefaultLadder(cfg.beam.nbest)),
                               corpus));
  EXPECT_NE(LadderReportToTable(r).find("+syllable"), std::string::npos);
}

TEST_F(ToyPipelineTest, DecodeAllMatchesSingleDecodes) {
  PipelineConfig cfg = Config();
  cfg.synth.noise = 0.3;
  Resources res = LoadResources(cfg);
  SynthCorpus corpus = SynthesizeCorpus(corpus_->transcripts, res, cfg);
  std::vector<const Posteriorgram*> pgs;
  for (const auto& u : corpus.utterances) pgs.push_back(&u.char_pg);
  KeywordTrie trie = BuildCharTrie(res, cfg.bias);
  auto all = DecodeAll(pgs, res.chars, &*res.char_lm, &trie, cfg.beam,
                       cfg.bias, DecodeOptions(), 3);
  ASSERT_EQ(all.size(), pgs.size());
  for (size_t i = 0; i < pgs.size(); i += 7) {
    auto one = PrefixBeamSearch(*pgs[i], res.chars, &*res.char_lm, &trie,
                                cfg.beam, cfg.bias);
    EXPECT_EQ(NBestToJson("u", one), NBestToJson("u", all[i]));
  }
}

}  // namespace
}  // namespace kwspot
