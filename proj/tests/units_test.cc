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

#include "kwspot/units.h"

#include <gtest/gtest.h>

#include "kwspot/error.h"
#include "kwspot/io_util.h"
#include "oracles.h"

namespace kwspot {
namespace {

using testing::TempDir;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TEST(UnitSetTest, LoadPrependsBlank) {
  TempDir dir;
  WriteFile(dir / "ab.units", "a\nb\n");
  UnitSet set = LoadUnitSet(dir / "ab.units", UnitKind::kCharacter);
  EXPECT_EQ(set.units(), (std::vector<std::string>{"<blk>", "a", "b"}));
  EXPECT_EQ(set.id(), "ab");
  EXPECT_EQ(set.Symbol(kBlankId), "<blk>");
}

TEST(UnitSetTest, ExplicitBlankIsNotDuplicated) {
  TempDir dir;
  WriteFile(dir / "x.units", "<blk>\na\n");
  EXPECT_EQ(LoadUnitSet(dir / "x.units", UnitKind::kCharacter).size(), 2);
}

TEST(UnitSetTest, DuplicateUnit) {
  TempDir dir;
  WriteFile(dir / "d.units", "a\na\n");
  EXPECT_EQ(CodeOf([&] { LoadUnitSet(dir / "d.units", UnitKind::kCharacter); }),
            ErrorCode::kDuplicateUnit);
}

TEST(UnitSetTest, EmptyFile) {
  TempDir dir;
  WriteFile(dir / "e.units", "# nothing\n\n");
  EXPECT_EQ(CodeOf([&] { LoadUnitSet(dir / "e.units", UnitKind::kCharacter); }),
            ErrorCode::kEmptyUnitSet);
}

TEST(UnitSetTest, FiveThousandCharacters) {
  TempDir dir;
  std::string text;
  std::vector<std::string> expected;
  for (int i = 0; i < 5000; ++i) {
    const uint32_t cp = 0x4E00 + i;
    std::string ch;
    ch += static_cast<char>(0xE0 | (cp >> 12));
    ch += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    ch += static_cast<char>(0x80 | (cp & 0x3F));
    text += ch + "\n";
  }
  WriteFile(dir / "big.units", text);
  EXPECT_EQ(LoadUnitSet(dir / "big.units", UnitKind::kCharacter).size(), 5001);
}

TEST(UnitSetTest, IdCommentAndRoundTrip) {
  TempDir dir;
  WriteFile(dir / "s.units", "# id: pinyin\nzhong1\nguo2\n");
  UnitSet set = LoadUnitSet(dir / "s.units", UnitKind::kSyllable);
  EXPECT_EQ(set.id(), "pinyin");
  WriteUnitSet(set, dir / "s.units");
  EXPECT_EQ(ReadFile(dir / "s.units"), "# id: pinyin\nzhong1\nguo2\n");

  WriteFile(dir / "plain.units", "a\nb\nc\n");
  UnitSet plain = LoadUnitSet(dir / "plain.units", UnitKind::kCharacter);
  WriteUnitSet(plain, dir / "plain.units");
  EXPECT_EQ(ReadFile(dir / "plain.units"), "a\nb\nc\n");
}

TEST(UnitSetTest, RenderJoinsSyllablesWithSpaces) {
  UnitSet chars("c", UnitKind::kCharacter, {"中", "国"});
  UnitSet sylls("s", UnitKind::kSyllable, {"zhong1", "guo2"});
  EXPECT_EQ(chars.Render({1, 2}), "中国");
  EXPECT_EQ(sylls.Render({1, 2}), "zhong1 guo2");
}

TEST(TokenizeTest, Examples) {
  UnitSet chars("c", UnitKind::kCharacter, {"中", "国"});
  EXPECT_EQ(TokenizeChars("中国", chars), (UnitSeq{1, 2}));
  EXPECT_EQ(TokenizeChars("中 国", chars), (UnitSeq{1, 2}));
  EXPECT_TRUE(TokenizeChars("", chars).empty());
  try {
    TokenizeChars("中X国", chars);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfVocabulary);
    EXPECT_NE(std::string(e.what()).find("'X' at position 1"), std::string::npos);
  }
}

TEST(TokenizeTest, MalformedUtf8) {
  UnitSet chars("c", UnitKind::kCharacter, {"a"});
  EXPECT_EQ(CodeOf([&] { TokenizeChars("\xE4\xB8", chars); }),
            ErrorCode::kBadFormat);
}

TEST(SyllabifyTest, Examples) {
  UnitSet sylls("s", UnitKind::kSyllable, {"zhong1", "guo2", "xing2", "hang2"});
  Lexicon lex;
  lex.Add("中", {"zhong1"});
  lex.Add("国", {"guo2"});
  lex.Add("行", {"xing2", "hang2"});
  EXPECT_EQ(Syllabify("中国", lex, sylls), (UnitSeq{1, 2}));
  EXPECT_TRUE(Syllabify("", lex, sylls).empty());
  EXPECT_EQ(Syllabify("行", lex, sylls), (UnitSeq{3}));
  EXPECT_EQ(CodeOf([&] { Syllabify("好", lex, sylls); }),
            ErrorCode::kOutOfVocabulary);
}

TEST(SyllabifyTest, LengthMatchesTokenization) {
  UnitSet chars("c", UnitKind::kCharacter, {"中", "国", "行"});
  UnitSet sylls("s", UnitKind::kSyllable, {"zhong1", "guo2", "xing2", "hang2"});
  Lexicon lex;
  lex.Add("中", {"zhong1"});
  lex.Add("国", {"guo2"});
  lex.Add("行", {"xing2", "hang2"});
  for (const char* text : {"", "中", "中国行", "行 行中", "国国国国"}) {
    EXPECT_EQ(Syllabify(text, lex, sylls).size(),
              TokenizeChars(text, chars).size())
        << text;
  }
}

TEST(LexiconTest, LoadWriteAndValidate) {
  TempDir dir;
  WriteFile(dir / "lex.tsv", "行\txing2 hang2\n中\tzhong1\n");
  Lexicon lex = LoadLexicon(dir / "lex.tsv");
  EXPECT_EQ(lex.Primary("行"), "xing2");
  ASSERT_NE(lex.Find("行"), nullptr);
  EXPECT_EQ(lex.Find("行")->size(), 2u);
  WriteLexicon(lex, dir / "out.tsv");
  Lexicon again = LoadLexicon(dir / "out.tsv");
  EXPECT_EQ(again.entries(), lex.entries());

  UnitSet chars("c", UnitKind::kCharacter, {"中", "行"});
  UnitSet sylls("s", UnitKind::kSyllable, {"zhong1", "xing2"});
  EXPECT_EQ(CodeOf([&] { lex.Validate(chars, sylls); }),
            ErrorCode::kOutOfVocabulary);
}

TEST(CharToSyllableMapTest, MapsPrimaryPronunciation) {
  UnitSet chars("c", UnitKind::kCharacter, {"中", "行", "x"});
  UnitSet sylls("s", UnitKind::kSyllable, {"zhong1", "xing2", "hang2"});
  Lexicon lex;
  lex.Add("中", {"zhong1"});
  lex.Add("行", {"hang2", "xing2"});
  EXPECT_EQ(CharToSyllableMap(chars, lex, sylls),
            (std::vector<UnitId>{kBlankId, 1, 3, -1}));
}

}  // namespace
}  // namespace kwspot
