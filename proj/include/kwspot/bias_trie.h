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

#ifndef KWSPOT_BIAS_TRIE_H_
#define KWSPOT_BIAS_TRIE_H_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kwspot/lm.h"
#include "kwspot/units.h"

namespace kwspot {

enum class BiasAward {
  // Each chunk is awarded at most once per hypothesis.
  kPerDistinctChunk,
  // Every completion of a chunk is awarded.
  kPerOccurrence,
};

struct BiasConfig {
  double alpha = 1.0;
  double beta = 4.0;
  int chunk_len = 4;
  BiasAward award = BiasAward::kPerDistinctChunk;
};

struct BiasChunk {
  UnitSeq units;
  double weight = 0.0;
  int keyword = 0;  // index of the first keyword that produced it
};

// Aho-Corasick automaton over unit ids. Accept nodes carry the chunks that
// end there, including those reached through dictionary suffix links.
class KeywordTrie {
 public:
  static constexpr int kRoot = 0;

  KeywordTrie();

  // Returns the chunk id; identical unit sequences share one chunk.
  int Insert(const UnitSeq& units, double weight, int keyword);
  // Computes failure links and output sets. Call after the last Insert.
  void Finalize();

  int Next(int state, UnitId unit) const;
  std::span<const int> Outputs(int state) const {
    return nodes_[state].outputs;
  }
  int Failure(int state) const { return nodes_[state].fail; }
  int Depth(int state) const { return nodes_[state].depth; }
  int Child(int state, UnitId unit) const;  // -1 if absent

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_chunks() const { return static_cast<int>(chunks_.size()); }
  const BiasChunk& chunk(int id) const { return chunks_[id]; }
  const std::vector<BiasChunk>& chunks() const { return chunks_; }

 private:
  struct Node {
    std::vector<std::pair<UnitId, int>> children;  // sorted by unit
    int fail = kRoot;
    int depth = 0;
    int own_chunk = -1;
    std::vector<int> outputs;
  };
  std::vector<Node> nodes_;
  std::vector<BiasChunk> chunks_;
};

// Splits a keyword into consecutive chunks of at most `chunk_len` units.
std::vector<UnitSeq> SegmentKeyword(const UnitSeq& keyword, int chunk_len);

// Weight of one chunk: -alpha * log10 P_lm(chunk) + beta, scored without
// sentence boundaries.
double ChunkWeight(const UnitSeq& chunk, const NGramLM& lm, const UnitSet& set,
                   const BiasConfig& cfg);

KeywordTrie BuildBiasTrie(const std::vector<UnitSeq>& keywords,
                          const NGramLM& lm, const UnitSet& set,
                          const BiasConfig& cfg);

}  // namespace kwspot

#endif  // KWSPOT_BIAS_TRIE_H_
