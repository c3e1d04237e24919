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

#include "kwspot/toy_corpus.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "kwspot/error.h"
#include "kwspot/io_util.h"

namespace kwspot {

namespace {

const std::vector<std::string> kToyInitials = {
    "b", "p", "m", "f", "d", "t", "n", "l", "g", "k", "h", "j",
    "q", "x", "zh", "ch", "sh", "r", "z", "c", "s", "y", "w", ""};
const std::vector<std::string> kToyFinals = {
    "a", "ai", "an", "ang", "ao", "e", "en", "eng",
    "i", "in", "ing", "ong", "ou", "u", "uo"};
const std::map<std::string, std::string> kInitialPartner = {
    {"zh", "z"}, {"z", "zh"}, {"ch", "c"}, {"c", "ch"}, {"sh", "s"},
    {"s", "sh"}, {"n", "l"},  {"l", "n"},  {"f", "h"},  {"h", "f"}};

std::string EncodeUtf8(uint32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

struct Base {
  std::string initial;
  std::string final;
  bool operator<(const Base& o) const {
    return std::tie(initial, final) < std::tie(o.initial, o.final);
  }
};

std::string Tonal(const Base& b, int tone) {
  return b.initial + b.final + std::to_string(tone);
}

class Sampler {
 public:
  explicit Sampler(uint64_t seed) : rng_(seed) {}

  int Uniform(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(rng_);
  }
  double Real() { return std::uniform_real_distribution<double>(0, 1)(rng_); }
  int Weighted(const std::vector<double>& w) {
    return std::discrete_distribution<int>(w.begin(), w.end())(rng_);
  }
  template <typename T>
  void Shuffle(std::vector<T>* v) {
    std::shuffle(v->begin(), v->end(), rng_);
  }

 private:
  std::mt19937_64 rng_;
};

// A sentence as a list of words (each a list of character indices).
using Sentence = std::vector<std::vector<int>>;

std::vector<int> Flatten(const Sentence& s) {
  std::vector<int> out;
  for (const auto& w : s) out.insert(out.end(), w.begin(), w.end());
  return out;
}

}  // namespace

ToyCorpus GenerateToyCorpus(const ToyCorpusConfig& cfg) {
  Sampler rng(cfg.seed);
  ToyCorpus corpus;

  // Toneless bases, closed under initial partners with probability 0.7.
  std::set<Base> bases;
  while (static_cast<int>(bases.size()) < cfg.num_bases) {
    bases.insert({kToyInitials[rng.Uniform(kToyInitials.size())],
                  kToyFinals[rng.Uniform(kToyFinals.size())]});
  }
  for (const Base& b : std::vector<Base>(bases.begin(), bases.end())) {
    auto it = kInitialPartner.find(b.initial);
    if (it != kInitialPartner.end() && rng.Real() < 0.7) {
      bases.insert({it->second, b.final});
    }
  }
  std::vector<Base> base_list(bases.begin(), bases.end());
  for (const Base& b : base_list) {
    for (int tone = 1; tone <= 4; ++tone) {
      corpus.syllables.push_back(Tonal(b, tone));
    }
  }

  // Two tones per base carry characters.
  std::vector<std::pair<int, int>> usable;  // (base index, tone)
  for (int b = 0; b < static_cast<int>(base_list.size()); ++b) {
    int t1 = 1 + rng.Uniform(4);
    int t2 = 1 + (t1 + rng.Uniform(3)) % 4;
    usable.emplace_back(b, t1);
    usable.emplace_back(b, t2);
  }
  // Common characters carry the filler vocabulary. Rare characters only
  // appear in keywords; each one sounds like (or nearly like) a common one.
  const int num_common = cfg.num_chars - cfg.num_rare_chars;
  if (num_common < 1 || cfg.num_rare_chars < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "toy corpus: need both common and rare characters");
  }
  std::map<Base, int> base_index;
  for (int b = 0; b < static_cast<int>(base_list.size()); ++b) {
    base_index[base_list[b]] = b;
  }
  auto partner_base = [&](int b) -> int {
    auto it = kInitialPartner.find(base_list[b].initial);
    if (it == kInitialPartner.end()) return -1;
    auto bi = base_index.find({it->second, base_list[b].final});
    return bi == base_index.end() ? -1 : bi->second;
  };
  std::vector<std::pair<int, int>> char_pron(cfg.num_chars);
  for (int c = 0; c < cfg.num_chars; ++c) {
    corpus.chars.push_back(EncodeUtf8(0x4E00 + c));
    if (c < num_common) {
      char_pron[c] = usable[rng.Uniform(usable.size())];
    } else {
      auto [b, tone] = char_pron[rng.Uniform(num_common)];
      const double r = rng.Real();
      if (r < 0.3) {
        tone = 1 + (tone + rng.Uniform(3)) % 4;
      } else if (r < 0.5 && partner_base(b) >= 0) {
        b = partner_base(b);
      }
      char_pron[c] = {b, tone};
    }
    std::vector<std::string> prons = {
        Tonal(base_list[char_pron[c].first], char_pron[c].second)};
    if (c < num_common && rng.Real() < cfg.polyphone_rate) {
      auto alt = usable[rng.Uniform(usable.size())];
      std::string s = Tonal(base_list[alt.first], alt.second);
      if (s != prons[0]) prons.push_back(s);
    }
    corpus.lexicon.Add(corpus.chars[c], prons);
  }

  // Zipf-distributed vocabulary of filler words.
  const std::vector<double> word_len_w = {0, 0.15, 0.5, 0.25, 0.1};
  std::vector<std::vector<int>> words;
  std::vector<double> zipf;
  for (int w = 0; w < cfg.num_words; ++w) {
    int len = rng.Weighted(word_len_w);
    std::vector<int> word(len);
    for (int& ch : word) ch = rng.Uniform(num_common);
    words.push_back(std::move(word));
    zipf.push_back(1.0 / (w + 1));
  }

  // Keywords, split into four LM-frequency tiers.
  const std::vector<double> kw_len_w = {0, 0, 0.4, 0.35, 0.25};
  std::vector<std::vector<int>> keywords;
  std::set<std::vector<int>> kw_set;
  while (static_cast<int>(keywords.size()) < cfg.num_keywords) {
    int len = rng.Weighted(kw_len_w);
    std::vector<int> kw(len);
    for (int& ch : kw) ch = num_common + rng.Uniform(cfg.num_rare_chars);
    bool confusable = false;
    for (int i = 0; i + 1 < len && !confusable; ++i) {
      const int a = char_pron[kw[i]].first, b = char_pron[kw[i + 1]].first;
      confusable = a == b || partner_base(a) == b;
    }
    if (confusable || !kw_set.insert(kw).second) continue;
    keywords.push_back(std::move(kw));
  }
  std::vector<int> tier(keywords.size());
  for (size_t k = 0; k < tier.size(); ++k) tier[k] = k % 4;
  rng.Shuffle(&tier);
  const int tier_count[4] = {0, 2, 12, 40};

  auto text_of = [&](const std::vector<int>& chars) {
    std::string s;
    for (int c : chars) s += corpus.chars[c];
    return s;
  };
  for (size_t k = 0; k < keywords.size(); ++k) {
    char id[32];
    std::snprintf(id, sizeof(id), "kw%03zu", k + 1);
    corpus.keywords.emplace_back(id, text_of(keywords[k]));
  }

  auto filler = [&](int min_chars, int max_chars) {
    Sentence s;
    int target = min_chars + rng.Uniform(max_chars - min_chars + 1);
    int n = 0;
    while (n < target) {
      const auto& w = words[rng.Weighted(zipf)];
      s.push_back(w);
      n += static_cast<int>(w.size());
    }
    return s;
  };
  auto insert_word = [&](Sentence* s, const std::vector<int>& w) {
    int pos = rng.Uniform(static_cast<int>(s->size()) + 1);
    s->insert(s->begin() + pos, w);
  };

  // LM training text.
  std::vector<Sentence> lm_sentences;
  for (int i = 0; i < cfg.num_lm_sentences; ++i) {
    lm_sentences.push_back(filler(6, 16));
  }
  for (size_t k = 0; k < keywords.size(); ++k) {
    for (int n = 0; n < tier_count[tier[k]]; ++n) {
      insert_word(&lm_sentences[rng.Uniform(cfg.num_lm_sentences)],
                  keywords[k]);
    }
  }
  for (const auto& s : lm_sentences) corpus.lm_text.push_back(text_of(Flatten(s)));

  // Evaluation transcripts with planted keywords. A transcript is redrawn
  // if some keyword's syllables appear over characters that do not spell
  // it, so syllable matches always correspond to real occurrences.
  std::vector<std::vector<int>> plants(cfg.num_utterances);
  for (size_t k = 0; k < keywords.size(); ++k) {
    std::vector<int> utts(cfg.num_utterances);
    for (int u = 0; u < cfg.num_utterances; ++u) utts[u] = u;
    rng.Shuffle(&utts);
    for (int n = 0; n < std::min(cfg.plants_per_keyword, cfg.num_utterances);
         ++n) {
      plants[utts[n]].push_back(static_cast<int>(k));
    }
  }
  auto primary_base = [&](int c) { return char_pron[c]; };
  std::vector<std::vector<std::pair<int, int>>> kw_syl;
  for (const auto& kw : keywords) {
    std::vector<std::pair<int, int>> s;
    for (int c : kw) s.push_back(primary_base(c));
    kw_syl.push_back(std::move(s));
  }
  // Polyphones syllabify to their first listed reading, which is char_pron.
  auto collides = [&](const std::vector<int>& chars) {
    for (size_t k = 0; k < keywords.size(); ++k) {
      const size_t m = keywords[k].size();
      for (size_t i = 0; i + m <= chars.size(); ++i) {
        bool syl_eq = true, char_eq = true;
        for (size_t j = 0; j < m && syl_eq; ++j) {
          syl_eq = primary_base(chars[i + j]) == kw_syl[k][j];
          char_eq = char_eq && chars[i + j] == keywords[k][j];
        }
        if (syl_eq && !char_eq) return true;
      }
    }
    return false;
  };
  for (int u = 0; u < cfg.num_utterances; ++u) {
    std::vector<int> chars;
    for (int attempt = 0;; ++attempt) {
      Sentence s = filler(6, 12);
      for (int k : plants[u]) insert_word(&s, keywords[k]);
      chars = Flatten(s);
      if (!collides(chars)) break;
      if (attempt > 1000) {
        throw Error(ErrorCode::kInvalidArgument,
                    "toy corpus: cannot avoid syllable collisions");
      }
    }
    char id[32];
    std::snprintf(id, sizeof(id), "utt%04d", u + 1);
    corpus.transcripts.emplace_back(id, text_of(chars));
  }

  // Confusion partners, always common characters: homophones first, then
  // tone variants and initial-pair variants. Rare characters get a single
  // partner, common ones up to two.
  std::map<std::pair<int, int>, std::vector<int>> common_by_pron;
  for (int c = 0; c < num_common; ++c) common_by_pron[char_pron[c]].push_back(c);
  for (int c = 0; c < cfg.num_chars; ++c) {
    auto [b, tone] = char_pron[c];
    std::vector<std::pair<double, int>> cand;
    for (int h : common_by_pron[{b, tone}]) {
      if (h != c) cand.emplace_back(1.0, h);
    }
    std::vector<std::pair<double, int>> near;
    for (int t = 1; t <= 4; ++t) {
      if (t == tone) continue;
      for (int h : common_by_pron[{b, t}]) near.emplace_back(0.5, h);
    }
    if (int pb = partner_base(b); pb >= 0) {
      for (int h : common_by_pron[{pb, tone}]) near.emplace_back(0.5, h);
    }
    rng.Shuffle(&cand);
    rng.Shuffle(&near);
    cand.insert(cand.end(), near.begin(), near.end());
    if (cand.empty()) {
      int h = rng.Uniform(num_common);
      if (h == c) h = (h + 1) % num_common;
      cand.emplace_back(0.5, h);
    }
    const size_t max_partners = c < num_common ? 2 : 1;
    if (cand.size() > max_partners) cand.resize(max_partners);
    for (auto [w, h] : cand) {
      corpus.char_confusion.emplace_back(corpus.chars[c], corpus.chars[h], w);
    }
  }
  for (int b = 0; b < static_cast<int>(base_list.size()); ++b) {
    for (int tone = 1; tone <= 4; ++tone) {
      std::vector<std::string> cand;
      for (int t = 1; t <= 4; ++t) {
        if (t != tone) cand.push_back(Tonal(base_list[b], t));
      }
      if (int pb = partner_base(b); pb >= 0) {
        cand.push_back(Tonal(base_list[pb], tone));
      }
      rng.Shuffle(&cand);
      if (cand.size() > 2) cand.resize(2);
      for (const auto& s : cand) {
        corpus.syll_confusion.emplace_back(Tonal(base_list[b], tone), s, 0.5);
      }
    }
  }
  return corpus;
}

void WriteToyCorpus(const ToyCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WriteUnitSet(UnitSet("chars", UnitKind::kCharacter, corpus.chars),
               dir / "chars.units");
  WriteUnitSet(UnitSet("sylls", UnitKind::kSyllable, corpus.syllables),
               dir / "sylls.units");
  WriteLexicon(corpus.lexicon, dir / "lexicon.tsv");
  auto write_pairs = [&](const auto& rows, const char* name) {
    std::ostringstream out;
    for (const auto& [a, b] : rows) out << a << '\t' << b << '\n';
    WriteFile(dir / name, out.str());
  };
  write_pairs(corpus.keywords, "keywords.tsv");
  write_pairs(corpus.transcripts, "transcripts.tsv");
  std::ostringstream lm;
  for (const auto& line : corpus.lm_text) lm << line << '\n';
  WriteFile(dir / "lm_text.txt", lm.str());
  auto write_conf = [&](const auto& rows, const char* name) {
    std::ostringstream out;
    for (const auto& [a, b, w] : rows) out << a << '\t' << b << '\t' << w << '\n';
    WriteFile(dir / name, out.str());
  };
  write_conf(corpus.char_confusion, "char_confusion.tsv");
  write_conf(corpus.syll_confusion, "syll_confusion.tsv");
}

}  // namespace kwspot
