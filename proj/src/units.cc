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

#include <algorithm>
#include <sstream>

#include "kwspot/error.h"
#include "kwspot/io_util.h"

namespace kwspot {

namespace {

size_t Utf8Length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 0;
}

bool IsSpace(std::string_view scalar) {
  return scalar == " " || scalar == "\t" || scalar == "\n" || scalar == "\r" ||
         scalar == "　";
}

}  // namespace

std::vector<std::string> SplitUtf8(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    size_t len = Utf8Length(static_cast<unsigned char>(text[i]));
    if (len == 0 || i + len > text.size()) {
      throw Error(ErrorCode::kBadFormat, "malformed UTF-8 at byte " +
                                             std::to_string(i));
    }
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        throw Error(ErrorCode::kBadFormat, "malformed UTF-8 at byte " +
                                               std::to_string(i + k));
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

UnitSet::UnitSet(std::string id, UnitKind kind,
                 const std::vector<std::string>& units)
    : id_(std::move(id)), kind_(kind) {
  units_.reserve(units.size() + 1);
  units_.emplace_back(kBlankSymbol);
  index_.emplace(std::string(kBlankSymbol), kBlankId);
  for (const auto& u : units) {
    if (u.empty()) throw Error(ErrorCode::kBadFormat, "empty unit string");
    if (!index_.emplace(u, static_cast<UnitId>(units_.size())).second) {
      throw Error(ErrorCode::kDuplicateUnit, u);
    }
    units_.push_back(u);
  }
  if (units_.size() < 2) {
    throw Error(ErrorCode::kEmptyUnitSet, "unit set '" + id_ + "' is empty");
  }
}

std::optional<UnitId> UnitSet::Find(std::string_view unit) const {
  auto it = index_.find(std::string(unit));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

UnitId UnitSet::At(std::string_view unit) const {
  auto id = Find(unit);
  if (!id) {
    throw Error(ErrorCode::kOutOfVocabulary,
                "'" + std::string(unit) + "' not in unit set " + id_);
  }
  return *id;
}

std::string UnitSet::Render(const UnitSeq& ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (kind_ == UnitKind::kSyllable && i > 0) out += ' ';
    out += Symbol(ids[i]);
  }
  return out;
}

UnitSet LoadUnitSet(const std::filesystem::path& path, UnitKind kind) {
  std::string id = path.stem().string();
  std::vector<std::string> units;
  for (const auto& raw : ReadLines(path)) {
    std::string_view line = Trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = Trim(line.substr(1));
      if (body.rfind("id:", 0) == 0) id = std::string(Trim(body.substr(3)));
      continue;
    }
    units.emplace_back(line);
  }
  if (!units.empty() && units.front() == kBlankSymbol) {
    units.erase(units.begin());
  }
  if (units.empty()) {
    throw Error(ErrorCode::kEmptyUnitSet, path.string());
  }
  return UnitSet(std::move(id), kind, units);
}

void WriteUnitSet(const UnitSet& set, const std::filesystem::path& path) {
  std::string out;
  if (path.stem().string() != set.id()) out += "# id: " + set.id() + "\n";
  for (size_t i = 1; i < set.units().size(); ++i) {
    out += set.units()[i];
    out += '\n';
  }
  WriteFile(path, out);
}

void Lexicon::Add(const std::string& character,
                  std::vector<std::string> prons) {
  if (prons.empty()) {
    throw Error(ErrorCode::kBadFormat, "no pronunciation for " + character);
  }
  entries_[character] = std::move(prons);
}

const std::vector<std::string>* Lexicon::Find(
    std::string_view character) const {
  auto it = entries_.find(std::string(character));
  return it == entries_.end() ? nullptr : &it->second;
}

const std::string& Lexicon::Primary(std::string_view character) const {
  const auto* prons = Find(character);
  if (prons == nullptr) {
    throw Error(ErrorCode::kOutOfVocabulary,
                "no lexicon entry for '" + std::string(character) + "'");
  }
  return prons->front();
}

void Lexicon::Validate(const UnitSet& chars, const UnitSet& sylls) const {
  for (const auto& [ch, prons] : entries_) {
    chars.At(ch);
    for (const auto& p : prons) sylls.At(p);
  }
}

Lexicon LoadLexicon(const std::filesystem::path& path) {
  Lexicon lexicon;
  int line_no = 0;
  for (const auto& raw : ReadLines(path)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = SplitString(line, '\t');
    if (fields.size() != 2) {
      throw Error(ErrorCode::kBadFormat, path.string() + ":" +
                                             std::to_string(line_no) +
                                             ": expected char<TAB>prons");
    }
    lexicon.Add(std::string(Trim(fields[0])), SplitWhitespace(fields[1]));
  }
  return lexicon;
}

void WriteLexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::vector<std::string>>> sorted(
      lexicon.entries().begin(), lexicon.entries().end());
  std::sort(sorted.begin(), sorted.end());
  std::ostringstream out;
  for (const auto& [ch, prons] : sorted) {
    out << ch << '\t';
    for (size_t i = 0; i < prons.size(); ++i) {
      out << (i ? " " : "") << prons[i];
    }
    out << '\n';
  }
  WriteFile(path, out.str());
}

UnitSeq TokenizeChars(std::string_view text, const UnitSet& chars) {
  UnitSeq ids;
  auto scalars = SplitUtf8(text);
  for (size_t pos = 0; pos < scalars.size(); ++pos) {
    if (IsSpace(scalars[pos])) continue;
    auto id = chars.Find(scalars[pos]);
    if (!id || *id == kBlankId) {
      throw Error(ErrorCode::kOutOfVocabulary,
                  "'" + scalars[pos] + "' at position " + std::to_string(pos));
    }
    ids.push_back(*id);
  }
  return ids;
}

UnitSeq Syllabify(std::string_view text, const Lexicon& lexicon,
                  const UnitSet& sylls) {
  UnitSeq ids;
  for (const auto& scalar : SplitUtf8(text)) {
    if (IsSpace(scalar)) continue;
    ids.push_back(sylls.At(lexicon.Primary(scalar)));
  }
  return ids;
}

std::vector<UnitId> CharToSyllableMap(const UnitSet& chars,
                                      const Lexicon& lexicon,
                                      const UnitSet& sylls) {
  std::vector<UnitId> map(chars.size(), -1);
  map[kBlankId] = kBlankId;
  for (UnitId c = 1; c < chars.size(); ++c) {
    if (const auto* prons = lexicon.Find(chars.Symbol(c))) {
      if (auto s = sylls.Find(prons->front())) map[c] = *s;
    }
  }
  return map;
}

}  // namespace kwspot
