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

#ifndef KWSPOT_UNITS_H_
#define KWSPOT_UNITS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kwspot {

using UnitId = int32_t;
using UnitSeq = std::vector<UnitId>;

inline constexpr UnitId kBlankId = 0;
inline constexpr std::string_view kBlankSymbol = "<blk>";

enum class UnitKind { kCharacter, kSyllable };

// Splits a UTF-8 string into Unicode scalars, each returned as its own
// UTF-8 substring. Throws kBadFormat on malformed input.
std::vector<std::string> SplitUtf8(std::string_view text);

// Ordered unit inventory. Unit 0 is always the blank "<blk>".
class UnitSet {
 public:
  UnitSet() = default;
  // `units` must not contain the blank; it is prepended.
  UnitSet(std::string id, UnitKind kind, const std::vector<std::string>& units);

  const std::string& id() const { return id_; }
  UnitKind kind() const { return kind_; }
  int size() const { return static_cast<int>(units_.size()); }
  const std::vector<std::string>& units() const { return units_; }
  const std::string& Symbol(UnitId id) const { return units_.at(id); }
  std::optional<UnitId> Find(std::string_view unit) const;
  UnitId At(std::string_view unit) const;  // throws kOutOfVocabulary

  // Concatenates symbols; syllables are joined by a single space.
  std::string Render(const UnitSeq& ids) const;

 private:
  std::string id_;
  UnitKind kind_ = UnitKind::kCharacter;
  std::vector<std::string> units_;
  std::unordered_map<std::string, UnitId> index_;
};

// One unit per line, '#' comments. An optional "# id: <name>" comment sets
// the id, otherwise the file stem is used.
UnitSet LoadUnitSet(const std::filesystem::path& path, UnitKind kind);
// The blank is implicit and not written.
void WriteUnitSet(const UnitSet& set, const std::filesystem::path& path);

// Character -> pronunciations (tonal pinyin). The first pronunciation is the
// primary one used for syllabification.
class Lexicon {
 public:
  Lexicon() = default;

  void Add(const std::string& character, std::vector<std::string> prons);
  const std::vector<std::string>* Find(std::string_view character) const;
  const std::string& Primary(std::string_view character) const;
  const std::unordered_map<std::string, std::vector<std::string>>& entries()
      const {
    return entries_;
  }
  // Throws kOutOfVocabulary if an entry references a unit absent from the
  // sets.
  void Validate(const UnitSet& chars, const UnitSet& sylls) const;

 private:
  std::unordered_map<std::string, std::vector<std::string>> entries_;
};

// TSV: char<TAB>syll1[ syll2 ...]
Lexicon LoadLexicon(const std::filesystem::path& path);
void WriteLexicon(const Lexicon& lexicon, const std::filesystem::path& path);

UnitSeq TokenizeChars(std::string_view text, const UnitSet& chars);
UnitSeq Syllabify(std::string_view text, const Lexicon& lexicon,
                  const UnitSet& sylls);

// Maps every character unit id to the syllable id of its primary
// pronunciation; -1 where the lexicon has no entry. Index 0 maps to blank.
std::vector<UnitId> CharToSyllableMap(const UnitSet& chars,
                                      const Lexicon& lexicon,
                                      const UnitSet& sylls);

}  // namespace kwspot

#endif  // KWSPOT_UNITS_H_
