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

#include "kwspot/prefix_beam_search.h"

#include <algorithm>
#include <climits>
#include <unordered_map>
#include <utility>

#include "json.hpp"
#include "kwspot/error.h"

namespace kwspot {

namespace {

// Every prefix ever created lives here once; hypotheses refer to nodes by
// index, so extending and merging never copy token sequences. LM and bias
// state depend only on the prefix and are cached on the node.
class PrefixTree {
 public:
  struct Node {
    int parent = -1;
    UnitId token = kBlankId;
    int depth = 0;
    LMState lm_state;
    double lm_log10 = 0.0;
    int trie_state = KeywordTrie::kRoot;
    double bias = 0.0;
    std::vector<int> awarded;  // sorted chunk ids, distinct-award mode
  };

  PrefixTree(const NGramLM* lm, std::vector<LmTokenId> lm_ids,
             const KeywordTrie* trie, BiasAward award)
      : lm_(lm), lm_ids_(std::move(lm_ids)), trie_(trie), award_(award) {
    Node root;
    if (lm_ != nullptr) root.lm_state = lm_->BeginState(true);
    nodes_.push_back(std::move(root));
  }

  const Node& node(int id) const { return nodes_[id]; }

  int Extend(int parent, UnitId unit) {
    const uint64_t key = (static_cast<uint64_t>(parent) << 32) |
                         static_cast<uint32_t>(unit);
    auto it = children_.find(key);
    if (it != children_.end()) return it->second;

    Node child;
    const Node& p = nodes_[parent];
    child.parent = parent;
    child.token = unit;
    child.depth = p.depth + 1;
    child.lm_log10 = p.lm_log10;
    child.bias = p.bias;
    if (lm_ != nullptr) {
      LMScore s = lm_->ScoreToken(p.lm_state, lm_ids_[unit]);
      child.lm_log10 += s.log10_prob;
      child.lm_state = s.next;
    }
    if (trie_ != nullptr) {
      child.trie_state = trie_->Next(p.trie_state, unit);
      child.awarded = p.awarded;
      for (int c : trie_->Outputs(child.trie_state)) {
        if (award_ == BiasAward::kPerDistinctChunk) {
          auto pos =
              std::lower_bound(child.awarded.begin(), child.awarded.end(), c);
          if (pos != child.awarded.end() && *pos == c) continue;
          child.awarded.insert(pos, c);
        }
        child.bias += trie_->chunk(c).weight;
      }
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(child));
    children_.emplace(key, id);
    return id;
  }

  UnitSeq Tokens(int id) const {
    UnitSeq out(nodes_[id].depth);
    for (int n = id; n > 0; n = nodes_[n].parent) {
      out[nodes_[n].depth - 1] = nodes_[n].token;
    }
    return out;
  }

  // Lexicographic comparison of the token sequences of two nodes.
  bool LexLess(int a, int b) const {
    if (a == b) return false;
    UnitSeq ta = Tokens(a), tb = Tokens(b);
    return ta < tb;
  }

 private:
  const NGramLM* lm_;
  std::vector<LmTokenId> lm_ids_;
  const KeywordTrie* trie_;
  BiasAward award_;
  std::vector<Node> nodes_;
  std::unordered_map<uint64_t, int> children_;
};

struct Hyp {
  int node = 0;
  double pb = kNegInf;   // mass of paths ending in blank
  double pnb = kNegInf;  // mass of paths ending in the last token
  double score = kNegInf;
};

void CheckUnits(const Posteriorgram& pg, const UnitSet& units) {
  if (pg.num_units() != units.size() ||
      (!pg.unit_set_id.empty() && pg.unit_set_id != units.id())) {
    throw Error(ErrorCode::kUnitSetMismatch,
                "posteriorgram '" + pg.utt_id + "' uses unit set '" +
                    pg.unit_set_id + "' with " +
                    std::to_string(pg.num_units()) + " units; expected '" +
                    units.id() + "' with " + std::to_string(units.size()));
  }
}

NBestEntry MakeEntry(const Posteriorgram& pg, const UnitSet& units,
                     UnitSeq tokens, double am, double lm_log10, double bias,
                     double lm_weight) {
  NBestEntry e;
  e.tokens = std::move(tokens);
  e.text = units.Render(e.tokens);
  e.score_am = am;
  e.score_lm = lm_log10;
  e.score_bias = bias;
  e.score_total = TotalScore(am, lm_log10, bias, lm_weight);
  e.spans = AlignViterbi(pg, e.tokens).spans;
  return e;
}

}  // namespace

std::vector<NBestEntry> PrefixBeamSearch(const Posteriorgram& pg,
                                         const UnitSet& units,
                                         const NGramLM* lm,
                                         const KeywordTrie* trie,
                                         const BeamConfig& cfg,
                                         const BiasConfig& bias) {
  CheckUnits(pg, units);
  if (cfg.beam_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "beam_size must be >= 1");
  }
  if (cfg.lm_weight == 0.0) lm = nullptr;
  if (!cfg.bias_enabled) trie = nullptr;
  const double lm_scale = cfg.lm_weight * 2.302585092994046;

  std::vector<LmTokenId> lm_ids;
  if (lm != nullptr) {
    lm_ids.resize(units.size());
    for (UnitId u = 0; u < units.size(); ++u) lm_ids[u] = lm->Id(units.Symbol(u));
  }
  PrefixTree tree(lm, std::move(lm_ids), trie, bias.award);

  auto rank_score = [&](const Hyp& h) {
    const auto& n = tree.node(h.node);
    return LogAddExp(h.pb, h.pnb) + lm_scale * n.lm_log10 + n.bias;
  };
  auto better = [&](const Hyp& a, const Hyp& b) {
    if (a.score != b.score) return a.score > b.score;
    return tree.LexLess(a.node, b.node);
  };

  std::vector<Hyp> beam(1);
  beam[0].pb = 0.0;
  beam[0].score = 0.0;

  const int frames = pg.num_frames();
  const int vocab = pg.num_units();
  const int cap = cfg.max_tokens_per_frame > 0
                      ? cfg.max_tokens_per_frame
                      : cfg.beam_size;
  std::vector<UnitId> candidates;
  std::unordered_map<int, size_t> slot;
  std::vector<Hyp> next;

  for (int t = 0; t < frames; ++t) {
    auto row = pg.logp.row(t);

    candidates.clear();
    for (UnitId u = 1; u < vocab; ++u) {
      if (row(u) >= cfg.token_min_logp) candidates.push_back(u);
    }
    if (static_cast<int>(candidates.size()) > cap) {
      auto by_logp = [&](UnitId a, UnitId b) {
        return row(a) != row(b) ? row(a) > row(b) : a < b;
      };
      std::nth_element(candidates.begin(), candidates.begin() + cap,
                       candidates.end(), by_logp);
      candidates.resize(cap);
      std::sort(candidates.begin(), candidates.end());
    }

    slot.clear();
    next.clear();
    auto at = [&](int node) -> Hyp& {
      auto [it, inserted] = slot.try_emplace(node, next.size());
      if (inserted) {
        next.emplace_back();
        next.back().node = node;
      }
      return next[it->second];
    };

    const double blank_lp = row(kBlankId);
    for (const Hyp& h : beam) {
      const double total = LogAddExp(h.pb, h.pnb);
      const auto& node = tree.node(h.node);
      const UnitId last = node.depth > 0 ? node.token : kBlankId;
      // *a + blank -> *a
      {
        Hyp& n = at(h.node);
        n.pb = LogAddExp(n.pb, total + blank_lp);
      }
      // *a + a -> *a
      if (last != kBlankId && h.pnb != kNegInf) {
        Hyp& n = at(h.node);
        n.pnb = LogAddExp(n.pnb, h.pnb + row(last));
      }
      for (UnitId u : candidates) {
        // *a<blank> + a -> *aa, and *a + b -> *ab
        const double from = (u == last) ? h.pb : total;
        if (from == kNegInf) continue;
        const int child = tree.Extend(h.node, u);
        Hyp& n = at(child);
        n.pnb = LogAddExp(n.pnb, from + row(u));
      }
    }

    for (Hyp& h : next) h.score = rank_score(h);
    if (static_cast<int>(next.size()) > cfg.beam_size) {
      std::partial_sort(next.begin(), next.begin() + cfg.beam_size, next.end(),
                        better);
      next.resize(cfg.beam_size);
    } else {
      std::sort(next.begin(), next.end(), better);
    }
    beam.swap(next);
  }

  std::sort(beam.begin(), beam.end(), better);
  const size_t keep =
      std::min(beam.size(), static_cast<size_t>(std::max(cfg.nbest, 1)));
  std::vector<NBestEntry> result;
  result.reserve(keep);
  for (size_t i = 0; i < keep; ++i) {
    const auto& node = tree.node(beam[i].node);
    result.push_back(MakeEntry(pg, units, tree.Tokens(beam[i].node),
                               LogAddExp(beam[i].pb, beam[i].pnb),
                               node.lm_log10, node.bias,
                               lm != nullptr ? cfg.lm_weight : 0.0));
  }
  return result;
}

std::vector<NBestEntry> GreedyNBest(const Posteriorgram& pg,
                                    const UnitSet& units) {
  CheckUnits(pg, units);
  GreedyResult g = GreedyPath(pg);
  // score_am is the single best path's log probability.
  double am = 0.0;
  for (int t = 0; t < pg.num_frames(); ++t) am += pg.logp(t, g.frame_argmax[t]);
  std::vector<NBestEntry> out;
  out.push_back(MakeEntry(pg, units, g.tokens, am, 0.0, 0.0, 0.0));
  return out;
}

std::string NBestToJson(const std::string& utt_id,
                        const std::vector<NBestEntry>& hyps) {
  nlohmann::ordered_json j;
  j["utt_id"] = utt_id;
  j["hyps"] = nlohmann::ordered_json::array();
  for (const auto& h : hyps) {
    nlohmann::ordered_json o;
    o["text"] = h.text;
    o["tokens"] = h.tokens;
    o["score_am"] = h.score_am;
    o["score_lm"] = h.score_lm;
    o["score_bias"] = h.score_bias;
    o["score_total"] = h.score_total;
    auto spans = nlohmann::ordered_json::array();
    for (const auto& s : h.spans) {
      spans.push_back({s.start_frame, s.end_frame, s.peak_frame});
    }
    o["spans"] = std::move(spans);
    j["hyps"].push_back(std::move(o));
  }
  return j.dump();
}

std::vector<NBestEntry> NBestFromJson(std::string_view line,
                                      std::string* utt_id) {
  std::vector<NBestEntry> out;
  try {
    auto j = nlohmann::json::parse(line);
    if (utt_id != nullptr) *utt_id = j.at("utt_id").get<std::string>();
    for (const auto& o : j.at("hyps")) {
      NBestEntry e;
      e.text = o.at("text").get<std::string>();
      e.tokens = o.at("tokens").get<UnitSeq>();
      e.score_am = o.at("score_am").get<double>();
      e.score_lm = o.at("score_lm").get<double>();
      e.score_bias = o.at("score_bias").get<double>();
      e.score_total = o.at("score_total").get<double>();
      for (const auto& s : o.at("spans")) {
        TokenSpan span;
        span.start_frame = s.at(0).get<int>();
        span.end_frame = s.at(1).get<int>();
        span.peak_frame = s.at(2).get<int>();
        e.spans.push_back(span);
      }
      if (e.spans.size() != e.tokens.size()) {
        throw Error(ErrorCode::kBadFormat, "spans/tokens length mismatch");
      }
      for (size_t k = 0; k < e.spans.size(); ++k) e.spans[k].token = e.tokens[k];
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadFormat, e.what());
  }
  return out;
}

}  // namespace kwspot
