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

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kwspot/error.h"
#include "kwspot/eval.h"
#include "kwspot/io_util.h"
#include "kwspot/kws.h"
#include "kwspot/lm.h"
#include "kwspot/pipeline.h"
#include "kwspot/prefix_beam_search.h"
#include "kwspot/toy_corpus.h"

namespace fs = std::filesystem;
using namespace kwspot;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

// Flags that override the config file.
struct Overrides {
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> noise;
  std::optional<int> beam_size;
  std::optional<int> nbest;
  std::optional<double> lm_weight;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> chunk_len;
  std::optional<double> fuzzy_threshold;
  std::optional<double> theta;
  std::optional<int> window_pad;
  std::optional<double> atwv_beta;

  void Register(CLI::App* app) {
    app->add_option("--seed", seed, "Seed for all randomness");
    app->add_option("--jobs", jobs, "Worker threads");
    app->add_option("--noise", noise, "Synthetic posterior noise level");
    app->add_option("--beam-size", beam_size, "Prefix beam width");
    app->add_option("--nbest", nbest, "Hypotheses kept per utterance");
    app->add_option("--lm-weight", lm_weight, "Shallow fusion LM weight");
    app->add_option("--alpha", alpha, "Bias LM-rarity weight");
    app->add_option("--beta", beta, "Bias constant bonus");
    app->add_option("--chunk-len", chunk_len, "Bias chunk length");
    app->add_option("--fuzzy-threshold", fuzzy_threshold,
                    "Phonetic distance threshold");
    app->add_option("--theta", theta, "Decision threshold on normalised score");
    app->add_option("--window-pad", window_pad, "Frames added around matches");
    app->add_option("--atwv-beta", atwv_beta, "ATWV false-alarm weight");
  }

  void Apply(PipelineConfig* cfg) const {
    if (seed) cfg->run.seed = *seed;
    if (jobs) cfg->run.jobs = *jobs;
    if (noise) cfg->synth.noise = *noise;
    if (beam_size) cfg->beam.beam_size = *beam_size;
    if (nbest) cfg->beam.nbest = *nbest;
    if (lm_weight) cfg->beam.lm_weight = *lm_weight;
    if (alpha) cfg->bias.alpha = *alpha;
    if (beta) cfg->bias.beta = *beta;
    if (chunk_len) cfg->bias.chunk_len = *chunk_len;
    if (fuzzy_threshold) cfg->kws.fuzzy_threshold = *fuzzy_threshold;
    if (theta) cfg->kws.decision_threshold = *theta;
    if (window_pad) cfg->kws.window_pad = *window_pad;
    if (atwv_beta) cfg->eval.atwv_beta = *atwv_beta;
  }
};

PipelineConfig LoadConfig(const std::string& path, const Overrides& ov) {
  PipelineConfig cfg = path.empty() ? PipelineConfig() : LoadPipelineConfig(path);
  ov.Apply(&cfg);
  ValidatePipelineConfig(cfg);
  return cfg;
}

void Emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    WriteFile(path, content);
  }
}

// Posteriorgram files in a directory, sorted by name.
std::vector<fs::path> ListPosteriorgrams(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".bkws" || ext == ".json")) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Posteriorgram> ReadPosteriorgramDir(const fs::path& dir) {
  std::vector<Posteriorgram> pgs;
  for (const auto& f : ListPosteriorgrams(dir)) {
    pgs.push_back(ReadPosteriorgram(f));
    ValidatePosteriorgram(pgs.back());
  }
  std::sort(pgs.begin(), pgs.end(),
            [](const auto& a, const auto& b) { return a.utt_id < b.utt_id; });
  return pgs;
}

std::map<std::string, std::vector<NBestEntry>> ReadNBest(const fs::path& path) {
  std::map<std::string, std::vector<NBestEntry>> out;
  for (const auto& line : ReadLines(path)) {
    if (Trim(line).empty()) continue;
    std::string utt;
    auto hyps = NBestFromJson(line, &utt);
    out[utt] = std::move(hyps);
  }
  return out;
}

int ReportSkipped(const std::vector<std::string>& skipped) {
  for (const auto& msg : skipped) std::cerr << "skipped " << msg << '\n';
  if (skipped.empty()) return 0;
  std::cerr << skipped.size() << " utterance(s) skipped\n";
  return kExitDomain;
}

int RunGenCorpus(const std::string& out_dir, const ToyCorpusConfig& tc,
                 int lm_order) {
  WriteToyWorkspace(GenerateToyCorpus(tc), tc.seed, lm_order, out_dir);
  return 0;
}

int RunSynth(const PipelineConfig& cfg, const std::string& transcripts,
             const std::string& out_dir) {
  Resources res = LoadResources(cfg);
  SynthCorpus corpus = SynthesizeCorpus(LoadTranscripts(transcripts), res, cfg);
  const fs::path dir(out_dir);
  fs::create_directories(dir / "char");
  fs::create_directories(dir / "syll");
  for (const auto& u : corpus.utterances) {
    WritePosteriorgram(u.char_pg, dir / "char" / (u.utt_id + ".bkws"));
    WritePosteriorgram(u.syll_pg, dir / "syll" / (u.utt_id + ".bkws"));
  }
  WriteFile(dir / "refs.tsv", FormatRefs(corpus.refs));
  nlohmann::ordered_json summary;
  summary["num_utterances"] = corpus.utterances.size();
  summary["num_references"] = corpus.refs.size();
  summary["total_speech_s"] = corpus.total_speech_s;
  summary["skipped"] = corpus.skipped;
  WriteFile(dir / "corpus.json", summary.dump(2) + "\n");
  return ReportSkipped(corpus.skipped);
}

int RunLmTrain(const PipelineConfig& cfg, const std::string& text,
               const std::string& units, const std::string& out) {
  const auto lines = ReadLines(text);
  if (units == "char") {
    WriteArpa(TrainNGram(lines, cfg.run.lm_order, cfg.run.lm_discount), out);
    return 0;
  }
  if (cfg.paths.lexicon.empty() || !fs::exists(cfg.paths.lexicon)) {
    throw Error(ErrorCode::kIo, "syllable LM training needs a lexicon");
  }
  UnitSet sylls = LoadUnitSet(cfg.paths.sylls, UnitKind::kSyllable);
  Lexicon lexicon = LoadLexicon(cfg.paths.lexicon);
  WriteArpa(TrainNGramTokens(SyllabifyLines(lines, lexicon, sylls),
                             cfg.run.lm_order, cfg.run.lm_discount),
            out);
  return 0;
}

int RunDecode(const PipelineConfig& cfg, const std::string& pg_dir,
              const std::string& units, bool greedy, bool no_lm, bool no_bias,
              const std::string& out) {
  Resources res = LoadResources(cfg);
  const bool syll = units == "syll";
  std::vector<Posteriorgram> pgs = ReadPosteriorgramDir(pg_dir);
  std::vector<const Posteriorgram*> ptrs;
  for (const auto& pg : pgs) ptrs.push_back(&pg);
  DecodeOptions opts{greedy, !no_lm, !no_bias && cfg.beam.bias_enabled};
  const auto& lm_opt = syll ? res.syll_lm : res.char_lm;
  const NGramLM* lm = opts.use_lm && lm_opt ? &*lm_opt : nullptr;
  if (opts.use_lm && !greedy && lm == nullptr) {
    throw Error(ErrorCode::kIo, "no LM configured for these units");
  }
  std::optional<KeywordTrie> trie;
  if (opts.use_bias && !greedy && !res.keywords.empty()) {
    trie = syll ? BuildSyllTrie(res, cfg.bias) : BuildCharTrie(res, cfg.bias);
  }
  auto lists = DecodeAll(ptrs, syll ? res.sylls : res.chars, lm,
                         trie ? &*trie : nullptr, cfg.beam, cfg.bias, opts,
                         cfg.run.jobs);
  std::string text;
  for (size_t i = 0; i < pgs.size(); ++i) {
    text += NBestToJson(pgs[i].utt_id, lists[i]) + "\n";
  }
  Emit(out, text);
  return 0;
}

int RunKws(const PipelineConfig& cfg, const std::string& char_pg_dir,
           const std::string& char_nbest, const std::string& syll_pg_dir,
           const std::string& syll_nbest, const std::string& out) {
  Resources res = LoadResources(cfg);
  if (res.keywords.empty()) {
    throw Error(ErrorCode::kIo, "no keyword list configured");
  }
  std::vector<Posteriorgram> char_pgs = ReadPosteriorgramDir(char_pg_dir);
  auto char_lists = ReadNBest(char_nbest);
  std::map<std::string, Posteriorgram> syll_pgs;
  std::map<std::string, std::vector<NBestEntry>> syll_lists;
  if (!syll_pg_dir.empty()) {
    for (auto& pg : ReadPosteriorgramDir(syll_pg_dir)) {
      syll_pgs.emplace(pg.utt_id, std::move(pg));
    }
    syll_lists = ReadNBest(syll_nbest);
  }
  std::vector<std::vector<Hit>> per_utt(char_pgs.size());
  ParallelFor(static_cast<int>(char_pgs.size()), cfg.run.jobs, [&](int i) {
    const auto& pg = char_pgs[i];
    auto it = char_lists.find(pg.utt_id);
    if (it == char_lists.end()) {
      throw Error(ErrorCode::kBadFormat, "no N-best list for " + pg.utt_id);
    }
    StageInput char_in{&pg, &it->second};
    StageInput syll_in;
    auto sp = syll_pgs.find(pg.utt_id);
    auto sl = syll_lists.find(pg.utt_id);
    if (sp != syll_pgs.end() && sl != syll_lists.end()) {
      syll_in = {&sp->second, &sl->second};
    }
    per_utt[i] = Detect(char_in, syll_in, res.keywords, *res.phonetics, cfg.kws);
  });
  std::vector<Hit> hits;
  for (auto& h : per_utt) hits.insert(hits.end(), h.begin(), h.end());
  Emit(out, FormatHits(hits));
  return 0;
}

int RunEval(const PipelineConfig& cfg_in, const std::string& hits_path,
            const std::string& refs_path, const std::string& corpus_path,
            const std::string& out) {
  EvalConfig cfg = cfg_in.eval;
  if (!corpus_path.empty()) {
    auto j = nlohmann::json::parse(ReadFile(corpus_path));
    cfg.total_speech_s = j.at("total_speech_s").get<double>();
  }
  auto hits = ParseHits(ReadFile(hits_path));
  auto refs = ParseRefs(ReadFile(refs_path));
  Emit(out, EvalReportToJson(Evaluate(hits, refs, cfg)));
  return 0;
}

int RunAblate(const PipelineConfig& cfg, const std::string& transcripts,
              const std::string& out, const std::string& table) {
  Resources res = LoadResources(cfg);
  if (res.keywords.empty()) {
    throw Error(ErrorCode::kIo, "no keyword list configured");
  }
  SynthCorpus corpus = SynthesizeCorpus(LoadTranscripts(transcripts), res, cfg);
  LadderResult result =
      RunLadder(corpus, res, cfg, DefaultLadder(cfg.beam.nbest));
  Emit(out, LadderReportToJson(result, corpus));
  if (!table.empty()) Emit(table, LadderReportToTable(result));
  return ReportSkipped(corpus.skipped);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyword spotting over CTC posteriorgrams"};
  app.require_subcommand(1);

  std::string config, transcripts, out_dir, out, text, units = "char";
  std::string pg_dir, char_pg, char_nbest, syll_pg, syll_nbest;
  std::string hits, refs, corpus, table;
  bool greedy = false, no_lm = false, no_bias = false;
  Overrides ov;
  ToyCorpusConfig tc;
  int lm_order = 4;
  std::optional<double> total_speech;

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic toy corpus");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", tc.seed, "Generator seed");
  gen->add_option("--utterances", tc.num_utterances, "Number of utterances");
  gen->add_option("--keywords", tc.num_keywords, "Number of keywords");
  gen->add_option("--plants", tc.plants_per_keyword,
                  "Utterances containing each keyword");
  gen->add_option("--lm-order", lm_order, "n-gram order of the trained LMs");

  auto* synth = app.add_subcommand("synth", "Synthesize posteriorgrams");
  synth->add_option("--config", config, "Pipeline config")->required();
  synth->add_option("--transcripts", transcripts, "utt_id<TAB>text")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();
  ov.Register(synth);

  auto* lm = app.add_subcommand("lm-train", "Train an n-gram LM");
  lm->add_option("--config", config, "Pipeline config");
  lm->add_option("--text", text, "One sentence per line")->required();
  lm->add_option("--units", units, "char or syll")
      ->check(CLI::IsMember({"char", "syll"}));
  lm->add_option("--out", out, "ARPA output")->required();
  std::optional<int> order;
  std::optional<double> discount;
  lm->add_option("--order", order, "n-gram order");
  lm->add_option("--discount", discount, "Absolute discount");

  auto* decode = app.add_subcommand("decode", "Decode posteriorgrams to N-best");
  decode->add_option("--config", config, "Pipeline config")->required();
  decode->add_option("--pg-dir", pg_dir, "Posteriorgram directory")->required();
  decode->add_option("--units", units, "char or syll")
      ->check(CLI::IsMember({"char", "syll"}));
  decode->add_option("--out", out, "N-best JSON lines (default stdout)");
  decode->add_flag("--greedy", greedy, "Best-path decoding");
  decode->add_flag("--no-lm", no_lm, "Disable shallow fusion");
  decode->add_flag("--no-bias", no_bias, "Disable keyword biasing");
  ov.Register(decode);

  auto* kws = app.add_subcommand("kws", "Detect keywords in N-best lists");
  kws->add_option("--config", config, "Pipeline config")->required();
  kws->add_option("--char-pg", char_pg, "Character posteriorgrams")->required();
  kws->add_option("--char-nbest", char_nbest, "Character N-best")->required();
  kws->add_option("--syll-pg", syll_pg, "Syllable posteriorgrams");
  kws->add_option("--syll-nbest", syll_nbest, "Syllable N-best");
  kws->add_option("--out", out, "Hits TSV (default stdout)");
  ov.Register(kws);

  auto* eval = app.add_subcommand("eval", "Score hits against references");
  eval->add_option("--config", config, "Pipeline config");
  eval->add_option("--hits", hits, "Hits TSV")->required();
  eval->add_option("--refs", refs, "References TSV")->required();
  eval->add_option("--corpus", corpus, "corpus.json written by synth");
  eval->add_option("--total-speech-s", total_speech, "Speech duration");
  eval->add_option("--out", out, "Report JSON (default stdout)");
  ov.Register(eval);

  auto* ablate = app.add_subcommand("ablate", "Run the ablation ladder");
  ablate->add_option("--config", config, "Pipeline config")->required();
  ablate->add_option("--transcripts", transcripts, "utt_id<TAB>text")
      ->required();
  ablate->add_option("--out", out, "Report JSON (default stdout)");
  ablate->add_option("--table", table, "Text table output");
  ov.Register(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return RunGenCorpus(out_dir, tc, lm_order);
    PipelineConfig cfg = LoadConfig(config, ov);
    if (*synth) return RunSynth(cfg, transcripts, out_dir);
    if (*lm) {
      if (order) cfg.run.lm_order = *order;
      if (discount) cfg.run.lm_discount = *discount;
      return RunLmTrain(cfg, text, units, out);
    }
    if (*decode) {
      return RunDecode(cfg, pg_dir, units, greedy, no_lm, no_bias, out);
    }
    if (*kws) {
      if (syll_pg.empty() != syll_nbest.empty()) {
        std::cerr << "--syll-pg and --syll-nbest go together\n";
        return kExitUsage;
      }
      return RunKws(cfg, char_pg, char_nbest, syll_pg, syll_nbest, out);
    }
    if (*eval) {
      if (total_speech) cfg.eval.total_speech_s = *total_speech;
      return RunEval(cfg, hits, refs, corpus, out);
    }
    if (*ablate) return RunAblate(cfg, transcripts, out, table);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const bool usage = e.code() == ErrorCode::kIo ||
                       e.code() == ErrorCode::kBadFormat;
    return usage ? kExitUsage : kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
