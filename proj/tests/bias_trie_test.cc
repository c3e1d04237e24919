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

#include "kwspot/bias_trie.h"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "kwspot/error.h"
#include "oracles.h"

namespace kwspot {
namespace {

NGramLM FlatUnigram(double a, double b) {
  return ParseArpa("\\data\\\nngram 1=4\n\n\\1-grams:\n" + std::to_string(a) +
                   "\ta\n" + std::to_string(b) +
                   "\tb\n-1\t</s>\n-99\t<s>\n\n\\end\\\n");
}

// Unit strings of every trie node, found by walking child edges.
std::map<int, UnitSeq> NodeStrings(const KeywordTrie& trie, int num_units) {
  std::map<int, UnitSeq> out{{KeywordTrie::kRoot, {}}};
  std::vector<int> stack{KeywordTrie::kRoot};
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (UnitId u = 1; u < num_units; ++u) {
      int c = trie.Child(s, u);
      if (c < 0) continue;
      UnitSeq str = out[s];
      str.push_back(u);
      out[c] = str;
      stack.push_back(c);
    }
  }
  return out;
}

bool IsSuffix(const UnitSeq& suffix, const UnitSeq& s) {
  return suffix.size() <= s.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), s.rbegin());
}

// Node whose string is the longest suffix of `s` present in the trie.
int LongestSuffixNode(const std::map<int, UnitSeq>& strings, const UnitSeq& s,
                      bool proper) {
  int best = KeywordTrie::kRoot;
  size_t best_len = 0;
  for (const auto& [node, str] : strings) {
    if (proper && str.size() >= s.size()) continue;
    if (IsSuffix(str, s) && str.size() >= best_len) {
      best = node;
      best_len = str.size();
    }
  }
  return best;
}

TEST(SegmentTest, NineUnitsInChunksOfFour) {
  UnitSeq kw{1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto chunks = SegmentKeyword(kw, 4);
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0], (UnitSeq{1, 2, 3, 4}));
  EXPECT_EQ(chunks[1], (UnitSeq{5, 6, 7, 8}));
  EXPECT_EQ(chunks[2], (UnitSeq{9}));
}

TEST(SegmentTest, ShortKeywordIsWhole) {
  EXPECT_EQ(SegmentKeyword({1, 2, 3}, 4), (std::vector<UnitSeq>{{1, 2, 3}}));
  EXPECT_THROW(SegmentKeyword({1}, 0), Error);
}

TEST(SegmentTest, ChunksConcatenateBack) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    UnitSeq kw(1 + rng() % 15);
    for (auto& u : kw) u = 1 + static_cast<UnitId>(rng() % 9);
    const int len = 1 + static_cast<int>(rng() % 6);
    UnitSeq joined;
    auto chunks = SegmentKeyword(kw, len);
    for (size_t i = 0; i < chunks.size(); ++i) {
      EXPECT_GE(chunks[i].size(), 1u);
      EXPECT_LE(static_cast<int>(chunks[i].size()), len);
      if (i + 1 < chunks.size()) {
        EXPECT_EQ(static_cast<int>(chunks[i].size()), len);
      }
      joined.insert(joined.end(), chunks[i].begin(), chunks[i].end());
    }
    EXPECT_EQ(joined, kw);
  }
}

TEST(ChunkWeightTest, AffineInLmScore) {
  UnitSet set = testing::LetterUnits(3);
  NGramLM lm = FlatUnigram(-1.25, -1.25);
  BiasConfig cfg;
  EXPECT_NEAR(ChunkWeight({1, 2}, lm, set, cfg), 6.5, 1e-12);
  cfg.alpha = 0.0;
  EXPECT_EQ(ChunkWeight({1, 2}, lm, set, cfg), 4.0);
  EXPECT_EQ(ChunkWeight({2, 2, 1}, lm, set, cfg), 4.0);
}

TEST(BuildBiasTrieTest, LongKeywordSegmented) {
  UnitSet set = testing::LetterUnits(3);
  NGramLM lm = FlatUnigram(-1.0, -2.0);
  BiasConfig cfg;
  KeywordTrie trie = BuildBiasTrie({{1, 2, 1, 2, 1, 2, 1, 2, 1}}, lm, set, cfg);
  ASSERT_EQ(trie.num_chunks(), 2);  // "abab" repeats
  EXPECT_EQ(trie.chunk(0).units, (UnitSeq{1, 2, 1, 2}));
  EXPECT_NEAR(trie.chunk(0).weight, 6.0 + 4.0, 1e-12);
  EXPECT_EQ(trie.chunk(1).units, (UnitSeq{1}));
  EXPECT_NEAR(trie.chunk(1).weight, 1.0 + 4.0, 1e-12);
}

TEST(BuildBiasTrieTest, InvalidKeywords) {
  UnitSet set = testing::LetterUnits(3);
  NGramLM lm = FlatUnigram(-1.0, -1.0);
  for (const UnitSeq& kw : {UnitSeq{}, UnitSeq{0}, UnitSeq{1, 7}}) {
    try {
      BuildBiasTrie({kw}, lm, set, BiasConfig());
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidKeyword);
    }
  }
}

TEST(KeywordTrieTest, ClassicPatterns) {
  // he, she, his, hers over h=1 e=2 s=3 i=4 r=5.
  KeywordTrie trie;
  trie.Insert({1, 2}, 1.0, 0);
  trie.Insert({3, 1, 2}, 2.0, 1);
  trie.Insert({1, 4, 3}, 3.0, 2);
  trie.Insert({1, 2, 5, 3}, 4.0, 3);
  trie.Finalize();
  int s = KeywordTrie::kRoot;
  std::multiset<int> found;
  for (UnitId u : UnitSeq{4, 3, 1, 2, 5, 3}) {  // "ushers" minus u
    s = trie.Next(s, u);
    for (int c : trie.Outputs(s)) found.insert(c);
  }
  EXPECT_EQ(found, (std::multiset<int>{0, 1, 3}));
  EXPECT_EQ(trie.Insert({1, 2}, 9.0, 5), 0);
}

TEST(KeywordTrieTest, MatchesBruteForceSuffixOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int units = 3 + static_cast<int>(rng() % 3);
    KeywordTrie trie;
    std::vector<UnitSeq> patterns;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      UnitSeq p(1 + rng() % 4);
      for (auto& u : p) u = 1 + static_cast<UnitId>(rng() % (units - 1));
      trie.Insert(p, 1.0, i);
      patterns.push_back(p);
    }
    trie.Finalize();
    auto strings = NodeStrings(trie, units);
    ASSERT_EQ(static_cast<int>(strings.size()), trie.num_nodes());
    for (const auto& [node, str] : strings) {
      EXPECT_EQ(trie.Depth(node), static_cast<int>(str.size()));
      if (node != KeywordTrie::kRoot) {
        EXPECT_EQ(trie.Failure(node), LongestSuffixNode(strings, str, true));
      }
      std::set<int> expected;
      for (int c = 0; c < trie.num_chunks(); ++c) {
        if (IsSuffix(trie.chunk(c).units, str)) expected.insert(c);
      }
      auto out = trie.Outputs(node);
      EXPECT_EQ(std::set<int>(out.begin(), out.end()), expected);
      EXPECT_EQ(out.size(), expected.size());
      for (UnitId u = 1; u < units; ++u) {
        UnitSeq ext = str;
        ext.push_back(u);
        EXPECT_EQ(trie.Next(node, u), LongestSuffixNode(strings, ext, false));
      }
    }
  }
}

}  // namespace
}  // namespace kwspot
