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

#ifndef KWSPOT_TOY_CORPUS_H_
#define KWSPOT_TOY_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "kwspot/units.h"

namespace kwspot {

// A small synthetic Mandarin-like language: CJK code points with generated
// tonal pinyin readings, so the inventory contains homophones, tone
// variants and zh/z-style initial pairs. Used to build desk-scale keyword
// spotting corpora with known ground truth.
struct ToyCorpusConfig {
  uint64_t seed = 7;
  int num_bases = 70;  // toneless syllables before adding initial partners
  int num_chars = 450;
  int num_rare_chars = 120;  // keyword-only characters, part of num_chars
  int num_words = 400;
  int num_keywords = 50;
  int num_utterances = 200;
  int plants_per_keyword = 4;
  int num_lm_sentences = 4000;
  double polyphone_rate = 0.05;
};

struct ToyCorpus {
  std::vector<std::string> chars;
  std::vector<std::string> syllables;
  Lexicon lexicon;
  std::vector<std::pair<std::string, std::string>> keywords;     // id, text
  std::vector<std::pair<std::string, std::string>> transcripts;  // utt, text
  std::vector<std::string> lm_text;
  // (unit, partner, weight) rows for the synthetic noise model.
  std::vector<std::tuple<std::string, std::string, double>> char_confusion;
  std::vector<std::tuple<std::string, std::string, double>> syll_confusion;
};

ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& cfg);

// Writes chars.units, sylls.units, lexicon.tsv, keywords.tsv,
// transcripts.tsv, lm_text.txt, char_confusion.tsv and syll_confusion.tsv.
void WriteToyCorpus(const ToyCorpus& corpus, const std::filesystem::path& dir);

}  // namespace kwspot

#endif  // KWSPOT_TOY_CORPUS_H_
