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

#include <algorithm>
#include <cmath>
#include <deque>

#include "kwspot/error.h"

namespace kwspot {

KeywordTrie::KeywordTrie() { nodes_.emplace_back(); }

int KeywordTrie::Child(int state, UnitId unit) const {
  const auto& ch = nodes_[state].children;
  auto it = std::lower_bound(
      ch.begin(), ch.end(), unit,
      [](const std::pair<UnitId, int>& a, UnitId u) { return a.first < u; });
  return (it != ch.end() && it->first == unit) ? it->second : -1;
}

int KeywordTrie::Insert(const UnitSeq& units, double weight, int keyword) {
  int state = kRoot;
  for (UnitId u : units) {
    int next = Child(state, u);
    if (next < 0) {
      next = static_cast<int>(nodes_.size());
      Node node;
      node.depth = nodes_[state].depth + 1;
      nodes_.push_back(std::move(node));
      auto& ch = nodes_[state].children;
      auto pos = std::lower_bound(
          ch.begin(), ch.end(), u,
          [](const std::pair<UnitId, int>& a, UnitId v) { return a.first < v; });
      ch.insert(pos, {u, next});
    }
    state = next;
  }
  if (nodes_[state].own_chunk >= 0) return nodes_[state].own_chunk;
  int id = static_cast<int>(chunks_.size());
  chunks_.push_back({units, weight, keyword});
  nodes_[state].own_chunk = id;
  return id;
}

void KeywordTrie::Finalize() {
  std::deque<int> queue;
  for (auto& n : nodes_) n.outputs.clear();
  for (const auto& [u, child] : nodes_[kRoot].children) {
    nodes_[child].fail = kRoot;
    queue.push_back(child);
  }
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    Node& node = nodes_[s];
    if (node.own_chunk >= 0) node.outputs.push_back(node.own_chunk);
    const auto& inherited = nodes_[node.fail].outputs;
    node.outputs.insert(node.outputs.end(), inherited.begin(), inherited.end());
    for (const auto& [u, child] : node.children) {
      int f = node.fail;
      while (f != kRoot && Child(f, u) < 0) f = nodes_[f].fail;
      int target = Child(f, u);
      nodes_[child].fail = (target >= 0 && target != child) ? target : kRoot;
      queue.push_back(child);
    }
  }
}

int KeywordTrie::Next(int state, UnitId unit) const {
  while (true) {
    int next = Child(state, unit);
    if (next >= 0) return next;
    if (state == kRoot) return kRoot;
    state = nodes_[state].fail;
  }
}

std::vector<UnitSeq> SegmentKeyword(const UnitSeq& keyword, int chunk_len) {
  if (chunk_len < 1) {
    throw Error(ErrorCode::kInvalidArgument, "chunk_len must be >= 1");
  }
  std::vector<UnitSeq> chunks;
  for (size_t i = 0; i < keyword.size(); i += chunk_len) {
    size_t end = std::min(keyword.size(), i + chunk_len);
    chunks.emplace_back(keyword.begin() + i, keyword.begin() + end);
  }
  return chunks;
}

double ChunkWeight(const UnitSeq& chunk, const NGramLM& lm, const UnitSet& set,
                   const BiasConfig& cfg) {
  std::vector<std::string> tokens;
  tokens.reserve(chunk.size());
  for (UnitId u : chunk) tokens.push_back(set.Symbol(u));
  return -cfg.alpha * ScoreSequence(lm, tokens, false) + cfg.beta;
}

KeywordTrie BuildBiasTrie(const std::vector<UnitSeq>& keywords,
                          const NGramLM& lm, const UnitSet& set,
                          const BiasConfig& cfg) {
  KeywordTrie trie;
  for (size_t k = 0; k < keywords.size(); ++k) {
    const UnitSeq& kw = keywords[k];
    if (kw.empty()) throw Error(ErrorCode::kInvalidKeyword, "empty keyword");
    for (UnitId u : kw) {
      if (u == kBlankId || u < 0 || u >= set.size()) {
        throw Error(ErrorCode::kInvalidKeyword,
                    "keyword contains blank or out-of-range unit");
      }
    }
    for (const auto& chunk : SegmentKeyword(kw, cfg.chunk_len)) {
      double w = ChunkWeight(chunk, lm, set, cfg);
      if (!std::isfinite(w)) {
        throw Error(ErrorCode::kInvalidKeyword, "non-finite bias weight");
      }
      trie.Insert(chunk, w, static_cast<int>(k));
    }
  }
  trie.Finalize();
  return trie;
}

}  // namespace kwspot
