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

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"
#include "kwspot/error.h"
#include "kwspot/io_util.h"

namespace kwspot {

namespace {

namespace fs = std::filesystem;
using boost::property_tree::ptree;

bool ParseBool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error(ErrorCode::kBadFormat, "bad boolean: " + s);
}

std::string FormatDouble(double v) {
  for (int precision = 6; precision < 17; ++precision) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    if (ParseDouble(out.str()) == v) return out.str();
  }
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

// Binds INI keys of one section to typed setters and rejects unknown keys.
class SectionReader {
 public:
  SectionReader(const ptree& root, const std::string& name) : name_(name) {
    if (auto s = root.get_child_optional(name)) section_ = &*s;
  }
  ~SectionReader() = default;

  template <typename Setter>
  void Read(const std::string& key, Setter&& set) {
    seen_.insert(key);
    if (section_ == nullptr) return;
    if (auto v = section_->get_optional<std::string>(key)) {
      try {
        set(std::string(Trim(*v)));
      } catch (const Error& e) {
        throw Error(ErrorCode::kBadFormat,
                    "config [" + name_ + "] " + key + ": " + e.what());
      }
    }
  }
  void Double(const std::string& key, double* out) {
    Read(key, [&](const std::string& v) { *out = ParseDouble(v); });
  }
  void Int(const std::string& key, int* out) {
    Read(key, [&](const std::string& v) { *out = static_cast<int>(ParseInt(v)); });
  }
  void Bool(const std::string& key, bool* out) {
    Read(key, [&](const std::string& v) { *out = ParseBool(v); });
  }
  void Path(const std::string& key, const fs::path& base, fs::path* out) {
    Read(key, [&](const std::string& v) {
      *out = v.empty() ? fs::path() : (fs::path(v).is_absolute() ? fs::path(v)
                                                                : base / v);
    });
  }
  void CheckUnknown() const {
    if (section_ == nullptr) return;
    for (const auto& [key, value] : *section_) {
      if (!seen_.count(key)) {
        throw Error(ErrorCode::kBadFormat,
                    "config [" + name_ + "]: unknown key " + key);
      }
    }
  }

 private:
  std::string name_;
  const ptree* section_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

PipelineConfig LoadPipelineConfig(const fs::path& path) {
  ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::kIo, std::string("cannot read config: ") + e.what());
  }
  static const std::set<std::string> kSections = {
      "paths", "beam", "bias", "kws", "eval", "synth", "run"};
  for (const auto& [name, section] : root) {
    if (!kSections.count(name)) {
      throw Error(ErrorCode::kBadFormat, "config: unknown section " + name);
    }
  }
  PipelineConfig cfg;
  const fs::path base = path.parent_path();

  SectionReader paths(root, "paths");
  paths.Path("chars", base, &cfg.paths.chars);
  paths.Path("sylls", base, &cfg.paths.sylls);
  paths.Path("lexicon", base, &cfg.paths.lexicon);
  paths.Path("char_lm", base, &cfg.paths.char_lm);
  paths.Path("syll_lm", base, &cfg.paths.syll_lm);
  paths.Path("keywords", base, &cfg.paths.keywords);
  paths.Path("cost_table", base, &cfg.paths.cost_table);
  paths.Path("char_confusion", base, &cfg.paths.char_confusion);
  paths.Path("syll_confusion", base, &cfg.paths.syll_confusion);
  paths.CheckUnknown();

  SectionReader beam(root, "beam");
  beam.Int("beam_size", &cfg.beam.beam_size);
  beam.Int("nbest", &cfg.beam.nbest);
  beam.Double("lm_weight", &cfg.beam.lm_weight);
  beam.Double("token_min_logp", &cfg.beam.token_min_logp);
  beam.Int("max_tokens_per_frame", &cfg.beam.max_tokens_per_frame);
  beam.CheckUnknown();

  SectionReader bias(root, "bias");
  bias.Bool("enabled", &cfg.beam.bias_enabled);
  bias.Double("alpha", &cfg.bias.alpha);
  bias.Double("beta", &cfg.bias.beta);
  bias.Int("chunk_len", &cfg.bias.chunk_len);
  bias.Read("award", [&](const std::string& v) {
    if (v == "distinct") {
      cfg.bias.award = BiasAward::kPerDistinctChunk;
    } else if (v == "occurrence") {
      cfg.bias.award = BiasAward::kPerOccurrence;
    } else {
      throw Error(ErrorCode::kBadFormat, "expected distinct or occurrence");
    }
  });
  bias.CheckUnknown();

  SectionReader kws(root, "kws");
  kws.Double("fuzzy_threshold", &cfg.kws.fuzzy_threshold);
  kws.Double("decision_threshold", &cfg.kws.decision_threshold);
  kws.Int("window_pad", &cfg.kws.window_pad);
  kws.Bool("char_stage", &cfg.kws.char_stage);
  kws.Bool("syllable_stage", &cfg.kws.syllable_stage);
  kws.Bool("fuzzy_stage", &cfg.kws.fuzzy_stage);
  kws.Bool("length_normalize", &cfg.kws.length_normalize);
  kws.CheckUnknown();

  SectionReader eval(root, "eval");
  eval.Double("atwv_beta", &cfg.eval.atwv_beta);
  eval.Double("total_speech_s", &cfg.eval.total_speech_s);
  eval.Read("overlap", [&](const std::string& v) {
    if (v == "midpoint") {
      cfg.eval.overlap = OverlapRule::kMidpoint;
    } else if (v == "min_overlap") {
      cfg.eval.overlap = OverlapRule::kMinOverlap;
    } else {
      throw Error(ErrorCode::kBadFormat, "expected midpoint or min_overlap");
    }
  });
  eval.Double("min_overlap_fraction", &cfg.eval.min_overlap_fraction);
  eval.CheckUnknown();

  SectionReader synth(root, "synth");
  synth.Int("frames_per_token", &cfg.synth.frames_per_token);
  synth.Int("blank_gap", &cfg.synth.blank_gap);
  synth.Double("noise", &cfg.synth.noise);
  synth.Double("frame_period_s", &cfg.synth.frame_period_s);
  synth.CheckUnknown();

  SectionReader run(root, "run");
  run.Read("seed", [&](const std::string& v) {
    cfg.run.seed = static_cast<uint64_t>(ParseInt(v));
  });
  run.Int("jobs", &cfg.run.jobs);
  run.Int("lm_order", &cfg.run.lm_order);
  run.Double("lm_discount", &cfg.run.lm_discount);
  run.CheckUnknown();
  ValidatePipelineConfig(cfg);
  return cfg;
}

void ValidatePipelineConfig(const PipelineConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(cfg.beam.beam_size >= 1, "beam_size must be >= 1");
  require(cfg.beam.nbest >= 1, "nbest must be >= 1");
  require(cfg.beam.lm_weight >= 0.0, "lm_weight must be >= 0");
  require(cfg.beam.max_tokens_per_frame >= 0,
          "max_tokens_per_frame must be >= 0");
  require(cfg.bias.chunk_len >= 1, "chunk_len must be >= 1");
  require(cfg.kws.fuzzy_threshold >= 0.0 && cfg.kws.fuzzy_threshold <= 1.0,
          "fuzzy_threshold must be in [0, 1]");
  require(cfg.kws.window_pad >= 0, "window_pad must be >= 0");
  require(cfg.eval.atwv_beta > 0.0, "atwv_beta must be > 0");
  require(cfg.eval.total_speech_s >= 0.0, "total_speech_s must be >= 0");
  require(cfg.eval.min_overlap_fraction > 0.0 &&
              cfg.eval.min_overlap_fraction <= 1.0,
          "min_overlap_fraction must be in (0, 1]");
  require(cfg.synth.frames_per_token >= 1, "frames_per_token must be >= 1");
  require(cfg.synth.blank_gap >= 0, "blank_gap must be >= 0");
  require(cfg.synth.noise >= 0.0 && cfg.synth.noise <= 1.0,
          "noise must be in [0, 1]");
  require(cfg.synth.frame_period_s > 0.0, "frame_period_s must be > 0");
  require(cfg.run.jobs >= 1, "jobs must be >= 1");
  require(cfg.run.lm_order >= 1, "lm_order must be >= 1");
  require(cfg.run.lm_discount >= 0.0 && cfg.run.lm_discount < 1.0,
          "lm_discount must be in [0, 1)");
}

std::string FormatPipelineConfig(const PipelineConfig& cfg) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  auto p = [](const fs::path& v) { return v.generic_string(); };
  out << "[paths]\n"
      << "chars = " << p(cfg.paths.chars) << '\n'
      << "sylls = " << p(cfg.paths.sylls) << '\n'
      << "lexicon = " << p(cfg.paths.lexicon) << '\n'
      << "char_lm = " << p(cfg.paths.char_lm) << '\n'
      << "syll_lm = " << p(cfg.paths.syll_lm) << '\n'
      << "keywords = " << p(cfg.paths.keywords) << '\n'
      << "cost_table = " << p(cfg.paths.cost_table) << '\n'
      << "char_confusion = " << p(cfg.paths.char_confusion) << '\n'
      << "syll_confusion = " << p(cfg.paths.syll_confusion) << '\n'
      << "\n[beam]\n"
      << "beam_size = " << cfg.beam.beam_size << '\n'
      << "nbest = " << cfg.beam.nbest << '\n'
      << "lm_weight = " << FormatDouble(cfg.beam.lm_weight) << '\n'
      << "token_min_logp = " << FormatDouble(cfg.beam.token_min_logp) << '\n'
      << "max_tokens_per_frame = " << cfg.beam.max_tokens_per_frame << '\n'
      << "\n[bias]\n"
      << "enabled = " << b(cfg.beam.bias_enabled) << '\n'
      << "alpha = " << FormatDouble(cfg.bias.alpha) << '\n'
      << "beta = " << FormatDouble(cfg.bias.beta) << '\n'
      << "chunk_len = " << cfg.bias.chunk_len << '\n'
      << "award = "
      << (cfg.bias.award == BiasAward::kPerDistinctChunk ? "distinct"
                                                         : "occurrence")
      << '\n'
      << "\n[kws]\n"
      << "fuzzy_threshold = " << FormatDouble(cfg.kws.fuzzy_threshold) << '\n'
      << "decision_threshold = " << FormatDouble(cfg.kws.decision_threshold)
      << '\n'
      << "window_pad = " << cfg.kws.window_pad << '\n'
      << "char_stage = " << b(cfg.kws.char_stage) << '\n'
      << "syllable_stage = " << b(cfg.kws.syllable_stage) << '\n'
      << "fuzzy_stage = " << b(cfg.kws.fuzzy_stage) << '\n'
      << "length_normalize = " << b(cfg.kws.length_normalize) << '\n'
      << "\n[eval]\n"
      << "atwv_beta = " << FormatDouble(cfg.eval.atwv_beta) << '\n'
      << "total_speech_s = " << FormatDouble(cfg.eval.total_speech_s) << '\n'
      << "overlap = "
      << (cfg.eval.overlap == OverlapRule::kMidpoint ? "midpoint"
                                                     : "min_overlap")
      << '\n'
      << "min_overlap_fraction = "
      << FormatDouble(cfg.eval.min_overlap_fraction) << '\n'
      << "\n[synth]\n"
      << "frames_per_token = " << cfg.synth.frames_per_token << '\n'
      << "blank_gap = " << cfg.synth.blank_gap << '\n'
      << "noise = " << FormatDouble(cfg.synth.noise) << '\n'
      << "frame_period_s = " << FormatDouble(cfg.synth.frame_period_s) << '\n'
      << "\n[run]\n"
      << "seed = " << cfg.run.seed << '\n'
      << "jobs = " << cfg.run.jobs << '\n'
      << "lm_order = " << cfg.run.lm_order << '\n'
      << "lm_discount = " << FormatDouble(cfg.run.lm_discount) << '\n';
  return out.str();
}

Resources LoadResources(const PipelineConfig& cfg) {
  const auto& p = cfg.paths;
  auto require = [](const fs::path& path, const char* what) {
    if (path.empty()) {
      throw Error(ErrorCode::kIo, std::string("no path configured for ") + what);
    }
    if (!fs::exists(path)) {
      throw Error(ErrorCode::kIo,
                  std::string(what) + " not found: " + path.string());
    }
  };
  require(p.chars, "chars");
  require(p.sylls, "sylls");
  require(p.lexicon, "lexicon");
  Resources res;
  res.chars = LoadUnitSet(p.chars, UnitKind::kCharacter);
  res.sylls = LoadUnitSet(p.sylls, UnitKind::kSyllable);
  res.lexicon = LoadLexicon(p.lexicon);
  res.lexicon.Validate(res.chars, res.sylls);
  CostTable costs = CostTable::Default();
  if (!p.cost_table.empty()) {
    require(p.cost_table, "cost table");
    costs = LoadCostTable(p.cost_table);
  }
  res.phonetics = std::make_unique<PhoneticIndex>(res.chars, res.lexicon,
                                                  res.sylls, std::move(costs));
  if (!p.keywords.empty()) {
    require(p.keywords, "keyword list");
    res.keywords = LoadKeywords(p.keywords, res.chars, res.lexicon, res.sylls);
  }
  if (!p.char_lm.empty()) {
    require(p.char_lm, "character LM");
    res.char_lm = ReadArpa(p.char_lm);
  }
  if (!p.syll_lm.empty()) {
    require(p.syll_lm, "syllable LM");
    res.syll_lm = ReadArpa(p.syll_lm);
  }
  if (!p.char_confusion.empty()) {
    require(p.char_confusion, "character confusion table");
    res.char_confusion = LoadConfusionTable(p.char_confusion, res.chars);
  }
  if (!p.syll_confusion.empty()) {
    require(p.syll_confusion, "syllable confusion table");
    res.syll_confusion = LoadConfusionTable(p.syll_confusion, res.sylls);
  }
  return res;
}

std::vector<std::vector<std::string>> SyllabifyLines(
    const std::vector<std::string>& lines, const Lexicon& lexicon,
    const UnitSet& sylls) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto& line : lines) {
    std::vector<std::string> tokens;
    for (UnitId id : Syllabify(line, lexicon, sylls)) {
      tokens.push_back(sylls.Symbol(id));
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

void ParallelFor(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < std::min(jobs, n); ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::pair<std::string, std::string>> LoadTranscripts(
    const fs::path& path) {
  std::vector<std::pair<std::string, std::string>> out;
  int line_no = 0;
  for (const auto& raw : ReadLines(path)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kBadFormat, path.string() + ":" +
                                             std::to_string(line_no) +
                                             ": expected utt_id<TAB>text");
    }
    out.emplace_back(std::string(Trim(line.substr(0, tab))),
                     std::string(Trim(line.substr(tab + 1))));
  }
  std::sort(out.begin(), out.end());
  for (size_t i = 1; i < out.size(); ++i) {
    if (out[i].first == out[i - 1].first) {
      throw Error(ErrorCode::kBadFormat, "duplicate utt_id " + out[i].first);
    }
  }
  return out;
}

std::vector<RefOccurrence> FindReferences(const std::string& utt_id,
                                          const UnitSeq& chars,
                                          const std::vector<Keyword>& keywords,
                                          const std::vector<TokenSpan>& layout,
                                          double frame_period_s) {
  std::vector<RefOccurrence> refs;
  for (const auto& kw : keywords) {
    const size_t m = kw.char_units.size();
    if (m == 0) continue;
    for (size_t i = 0; i + m <= chars.size(); ++i) {
      if (!std::equal(kw.char_units.begin(), kw.char_units.end(),
                      chars.begin() + i)) {
        continue;
      }
      refs.push_back({utt_id, kw.id, layout[i].start_frame * frame_period_s,
                      layout[i + m - 1].end_frame * frame_period_s});
    }
  }
  return refs;
}

SynthCorpus SynthesizeCorpus(
    const std::vector<std::pair<std::string, std::string>>& transcripts,
    const Resources& res, const PipelineConfig& cfg) {
  const int n = static_cast<int>(transcripts.size());
  std::vector<std::optional<Utterance>> utts(n);
  std::vector<std::vector<RefOccurrence>> refs(n);
  std::vector<std::string> errors(n);

  SynthConfig char_cfg = cfg.synth;
  char_cfg.confusion = res.char_confusion;
  SynthConfig syll_cfg = cfg.synth;
  syll_cfg.confusion = res.syll_confusion;
  const uint64_t syll_salt = 0x9E3779B97F4A7C15ULL;

  ParallelFor(n, cfg.run.jobs, [&](int i) {
    const auto& [utt_id, text] = transcripts[i];
    UnitSeq chars, sylls;
    try {
      chars = TokenizeChars(text, res.chars);
      sylls = Syllabify(text, res.lexicon, res.sylls);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOutOfVocabulary) throw;
      errors[i] = utt_id + ": " + e.what();
      return;
    }
    SynthConfig c = char_cfg;
    c.seed = StableHash(utt_id, cfg.run.seed);
    Utterance u;
    u.utt_id = utt_id;
    u.text = text;
    u.char_pg = SynthGenerate(chars, res.chars, c, utt_id);
    SynthConfig s = syll_cfg;
    s.seed = StableHash(utt_id, cfg.run.seed ^ syll_salt);
    u.syll_pg = SynthGenerate(sylls, res.sylls, s, utt_id);
    refs[i] = FindReferences(utt_id, chars, res.keywords, SynthLayout(chars, c),
                             c.frame_period_s);
    utts[i] = std::move(u);
  });

  SynthCorpus corpus;
  for (int i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      corpus.skipped.push_back(errors[i]);
      continue;
    }
    corpus.total_speech_s +=
        utts[i]->char_pg.num_frames() * utts[i]->char_pg.frame_period_s;
    corpus.utterances.push_back(std::move(*utts[i]));
    corpus.refs.insert(corpus.refs.end(), refs[i].begin(), refs[i].end());
  }
  return corpus;
}

std::vector<std::vector<NBestEntry>> DecodeAll(
    const std::vector<const Posteriorgram*>& pgs, const UnitSet& units,
    const NGramLM* lm, const KeywordTrie* trie, const BeamConfig& beam,
    const BiasConfig& bias, const DecodeOptions& opts, int jobs) {
  std::vector<std::vector<NBestEntry>> out(pgs.size());
  BeamConfig b = beam;
  b.bias_enabled = opts.use_bias && trie != nullptr;
  ParallelFor(static_cast<int>(pgs.size()), jobs, [&](int i) {
    if (opts.greedy) {
      out[i] = GreedyNBest(*pgs[i], units);
    } else {
      out[i] = PrefixBeamSearch(*pgs[i], units, opts.use_lm ? lm : nullptr,
                                b.bias_enabled ? trie : nullptr, b, bias);
    }
  });
  return out;
}

namespace {

std::vector<UnitSeq> KeywordUnits(const std::vector<Keyword>& keywords,
                                  bool syllables) {
  std::vector<UnitSeq> out;
  for (const auto& kw : keywords) {
    out.push_back(syllables ? kw.syll_units : kw.char_units);
  }
  return out;
}

}  // namespace

KeywordTrie BuildCharTrie(const Resources& res, const BiasConfig& bias) {
  if (!res.char_lm) {
    throw Error(ErrorCode::kInvalidArgument, "biasing needs a character LM");
  }
  return BuildBiasTrie(KeywordUnits(res.keywords, false), *res.char_lm,
                       res.chars, bias);
}

KeywordTrie BuildSyllTrie(const Resources& res, const BiasConfig& bias) {
  if (!res.syll_lm) {
    throw Error(ErrorCode::kInvalidArgument, "biasing needs a syllable LM");
  }
  return BuildBiasTrie(KeywordUnits(res.keywords, true), *res.syll_lm,
                       res.sylls, bias);
}

std::vector<LadderStage> DefaultLadder(int nbest) {
  std::vector<LadderStage> stages;
  LadderStage s;
  s.name = "greedy";
  s.greedy = true;
  s.lm = false;
  s.length_norm = false;
  stages.push_back(s);
  s.name = "+LM";
  s.greedy = false;
  s.lm = true;
  stages.push_back(s);
  s.name = "+length-norm";
  s.length_norm = true;
  stages.push_back(s);
  s.name = "+N-best";
  s.nbest = nbest;
  stages.push_back(s);
  s.name = "+bias";
  s.bias = true;
  stages.push_back(s);
  s.name = "+fuzzy";
  s.fuzzy = true;
  stages.push_back(s);
  s.name = "+syllable";
  s.syllable = true;
  stages.push_back(s);
  return stages;
}

LadderResult RunLadder(const SynthCorpus& corpus, const Resources& res,
                       const PipelineConfig& cfg,
                       const std::vector<LadderStage>& stages) {
  std::vector<const Posteriorgram*> char_pgs, syll_pgs;
  for (const auto& u : corpus.utterances) {
    char_pgs.push_back(&u.char_pg);
    syll_pgs.push_back(&u.syll_pg);
  }
  std::optional<KeywordTrie> char_trie, syll_trie;
  int max_nbest = 1;
  for (const auto& s : stages) {
    max_nbest = std::max(max_nbest, s.nbest);
    if (s.bias && !s.greedy) {
      if (!char_trie) char_trie = BuildCharTrie(res, cfg.bias);
      if (s.syllable && !syll_trie) syll_trie = BuildSyllTrie(res, cfg.bias);
    }
  }
  BeamConfig beam = cfg.beam;
  beam.nbest = max_nbest;

  using DecodeKey = std::tuple<bool, bool, bool, bool>;  // syll, greedy, lm, bias
  std::map<DecodeKey, std::vector<std::vector<NBestEntry>>> cache;
  auto decoded = [&](bool syll, const LadderStage& s)
      -> const std::vector<std::vector<NBestEntry>>& {
    DecodeKey key{syll, s.greedy, s.lm && !s.greedy, s.bias && !s.greedy};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    DecodeOptions opts{s.greedy, s.lm, s.bias};
    const NGramLM* lm = nullptr;
    if (s.lm && !s.greedy) {
      const auto& model = syll ? res.syll_lm : res.char_lm;
      if (!model) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("stage ") + s.name + " needs a " +
                        (syll ? "syllable" : "character") + " LM");
      }
      lm = &*model;
    }
    const KeywordTrie* trie = nullptr;
    if (s.bias && !s.greedy) trie = syll ? &*syll_trie : &*char_trie;
    auto lists = DecodeAll(syll ? syll_pgs : char_pgs,
                           syll ? res.sylls : res.chars, lm, trie, beam,
                           cfg.bias, opts, cfg.run.jobs);
    return cache.emplace(key, std::move(lists)).first->second;
  };

  EvalConfig eval = cfg.eval;
  if (eval.total_speech_s <= 0.0) eval.total_speech_s = corpus.total_speech_s;

  LadderResult result;
  const int n = static_cast<int>(corpus.utterances.size());
  for (const auto& s : stages) {
    const auto& char_lists = decoded(false, s);
    const std::vector<std::vector<NBestEntry>>* syll_lists =
        s.syllable ? &decoded(true, s) : nullptr;
    KwsConfig kws = cfg.kws;
    kws.char_stage = true;
    kws.syllable_stage = s.syllable;
    kws.fuzzy_stage = s.fuzzy;
    kws.length_normalize = s.length_norm;

    std::vector<std::vector<Hit>> per_utt(n);
    ParallelFor(n, cfg.run.jobs, [&](int i) {
      auto truncate = [&](const std::vector<NBestEntry>& list) {
        const size_t keep = std::min(list.size(), static_cast<size_t>(s.nbest));
        return std::vector<NBestEntry>(list.begin(), list.begin() + keep);
      };
      std::vector<NBestEntry> char_nbest = truncate(char_lists[i]);
      std::vector<NBestEntry> syll_nbest;
      StageInput char_in{&corpus.utterances[i].char_pg, &char_nbest};
      StageInput syll_in;
      if (syll_lists != nullptr) {
        syll_nbest = truncate((*syll_lists)[i]);
        syll_in = {&corpus.utterances[i].syll_pg, &syll_nbest};
      }
      per_utt[i] = Detect(char_in, syll_in, res.keywords, *res.phonetics, kws);
    });
    std::vector<Hit> hits;
    for (auto& h : per_utt) {
      hits.insert(hits.end(), std::make_move_iterator(h.begin()),
                  std::make_move_iterator(h.end()));
    }
    EvalReport report = Evaluate(hits, corpus.refs, eval, 0);
    LadderRow row;
    row.name = s.name;
    row.tp = report.tp;
    row.fp = report.fp;
    row.fn = report.fn;
    row.f1 = report.f1;
    row.atwv = report.atwv.atwv;
    result.rows.push_back(row);
    result.hits.push_back(std::move(hits));
  }
  return result;
}

std::string LadderReportToJson(const LadderResult& result,
                               const SynthCorpus& corpus) {
  nlohmann::ordered_json j;
  j["num_utterances"] = corpus.utterances.size();
  j["num_references"] = corpus.refs.size();
  j["total_speech_s"] = corpus.total_speech_s;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& row : result.rows) {
    nlohmann::ordered_json r;
    r["stage"] = row.name;
    r["tp"] = row.tp;
    r["fp"] = row.fp;
    r["fn"] = row.fn;
    r["precision"] = row.f1.precision;
    r["recall"] = row.f1.recall;
    r["f1"] = row.f1.f1;
    r["atwv"] = row.atwv;
    j["stages"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

std::string LadderReportToTable(const LadderResult& result) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %6s %6s %6s %8s %8s %8s %8s\n",
                "stage", "tp", "fp", "fn", "prec", "recall", "F1", "ATWV");
  out << line;
  for (const auto& row : result.rows) {
    std::snprintf(line, sizeof(line),
                  "%-14s %6zu %6zu %6zu %8.4f %8.4f %8.4f %8.4f\n",
                  row.name.c_str(), row.tp, row.fp, row.fn, row.f1.precision,
                  row.f1.recall, row.f1.f1, row.atwv);
    out << line;
  }
  return out.str();
}

std::filesystem::path WriteToyWorkspace(const ToyCorpus& corpus, uint64_t seed,
                                        int lm_order,
                                        const std::filesystem::path& dir) {
  WriteToyCorpus(corpus, dir);
  UnitSet sylls("sylls", UnitKind::kSyllable, corpus.syllables);
  WriteArpa(TrainNGram(corpus.lm_text, lm_order), dir / "char.arpa");
  WriteArpa(TrainNGramTokens(
                SyllabifyLines(corpus.lm_text, corpus.lexicon, sylls), lm_order),
            dir / "syll.arpa");
  PipelineConfig cfg;
  cfg.paths.chars = "chars.units";
  cfg.paths.sylls = "sylls.units";
  cfg.paths.lexicon = "lexicon.tsv";
  cfg.paths.char_lm = "char.arpa";
  cfg.paths.syll_lm = "syll.arpa";
  cfg.paths.keywords = "keywords.tsv";
  cfg.paths.char_confusion = "char_confusion.tsv";
  cfg.paths.syll_confusion = "syll_confusion.tsv";
  cfg.run.seed = seed;
  cfg.run.lm_order = lm_order;
  WriteFile(dir / "kwspot.ini", FormatPipelineConfig(cfg));
  return dir / "kwspot.ini";
}

}  // namespace kwspot
