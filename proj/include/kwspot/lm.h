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

#ifndef KWSPOT_LM_H_
#define KWSPOT_LM_H_

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kwspot {

inline constexpr int kMaxLmOrder = 8;
// log10 value used for zero probabilities and impossible backoffs.
inline constexpr double kLog10Zero = -99.0;

using LmTokenId = int32_t;

// The last (order - 1) tokens of the current prefix.
struct LMState {
  std::array<LmTokenId, kMaxLmOrder - 1> context{};
  uint8_t size = 0;

  bool operator==(const LMState& other) const {
    return size == other.size &&
           std::equal(context.begin(), context.begin() + size,
                      other.context.begin());
  }
};

struct LMScore {
  double log10_prob = 0.0;
  LMState next;
};

// Backoff n-gram model with log10 probabilities and backoff weights, as in
// ARPA files.
class NGramLM {
 public:
  struct Entry {
    double log10_prob = kLog10Zero;
    double log10_backoff = 0.0;
    bool has_backoff = false;
  };

  struct Key {
    std::array<LmTokenId, kMaxLmOrder> ids{};
    uint8_t size = 0;
    bool operator==(const Key& other) const {
      return size == other.size &&
             std::equal(ids.begin(), ids.begin() + size, other.ids.begin());
    }
  };

  struct KeyHash {
    size_t operator()(const Key& k) const {
      uint64_t h = 0x9E3779B97F4A7C15ULL ^ k.size;
      for (int i = 0; i < k.size; ++i) {
        h ^= static_cast<uint32_t>(k.ids[i]) + 0x9E3779B97F4A7C15ULL +
             (h << 6) + (h >> 2);
      }
      return static_cast<size_t>(h);
    }
  };

  using Table = std::unordered_map<Key, Entry, KeyHash>;

  explicit NGramLM(int order = 4);

  int order() const { return order_; }
  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::string& Token(LmTokenId id) const { return vocab_.at(id); }

  // Out-of-vocabulary strings map to <unk>.
  LmTokenId Id(std::string_view token) const;
  LmTokenId AddToken(std::string_view token);
  LmTokenId bos() const { return bos_; }
  LmTokenId eos() const { return eos_; }
  LmTokenId unk() const { return unk_; }

  // Empty context, or <s> when scoring with sentence boundaries.
  LMState BeginState(bool with_boundaries) const;

  LMScore ScoreToken(const LMState& state, LmTokenId token) const;
  LMScore ScoreToken(const LMState& state, std::string_view token) const {
    return ScoreToken(state, Id(token));
  }

  // Tables are indexed by n-gram length - 1.
  const Table& table(int length) const { return tables_.at(length - 1); }
  Table& mutable_table(int length) { return tables_.at(length - 1); }
  const Entry* Find(const Key& key) const;

 private:
  int order_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, LmTokenId> index_;
  LmTokenId bos_, eos_, unk_;
  std::vector<Table> tables_;
};

// Interpolated absolute discounting over character tokens (whitespace is
// ignored); each line is one sentence wrapped in <s> ... </s>. The unigram
// level interpolates with a uniform distribution over vocab + <unk>.
NGramLM TrainNGram(const std::vector<std::string>& lines, int order,
                   double discount = 0.75);
// Same, over pre-split token lines (e.g. syllables).
NGramLM TrainNGramTokens(const std::vector<std::vector<std::string>>& sentences,
                         int order, double discount = 0.75);

double ScoreSequence(const NGramLM& lm, const std::vector<std::string>& tokens,
                     bool with_boundaries);
double ScoreSequence(const NGramLM& lm, const std::vector<LmTokenId>& tokens,
                     bool with_boundaries);

std::string FormatArpa(const NGramLM& lm);
NGramLM ParseArpa(std::string_view text);
void WriteArpa(const NGramLM& lm, const std::filesystem::path& path);
NGramLM ReadArpa(const std::filesystem::path& path);

}  // namespace kwspot

#endif  // KWSPOT_LM_H_
