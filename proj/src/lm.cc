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

#include "kwspot/lm.h"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "kwspot/error.h"
#include "kwspot/io_util.h"
#include "kwspot/units.h"

namespace kwspot {

namespace {

constexpr const char* kBos = "<s>";
constexpr const char* kEos = "</s>";
constexpr const char* kUnk = "<unk>";

double SafeLog10(double p) {
  return p > 0.0 ? std::max(std::log10(p), kLog10Zero) : kLog10Zero;
}

NGramLM::Key MakeKey(const LmTokenId* ids, int n) {
  NGramLM::Key key;
  key.size = static_cast<uint8_t>(n);
  std::copy(ids, ids + n, key.ids.begin());
  return key;
}

// Per-context statistics used by absolute discounting.
struct ContextStats {
  double total = 0.0;
  int distinct = 0;
};

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

NGramLM::NGramLM(int order) : order_(order) {
  if (order < 1 || order > kMaxLmOrder) {
    throw Error(ErrorCode::kInvalidArgument,
                "LM order must be in [1, " + std::to_string(kMaxLmOrder) + "]");
  }
  tables_.resize(order);
  unk_ = AddToken(kUnk);
  bos_ = AddToken(kBos);
  eos_ = AddToken(kEos);
}

LmTokenId NGramLM::Id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

LmTokenId NGramLM::AddToken(std::string_view token) {
  auto [it, inserted] = index_.emplace(std::string(token),
                                       static_cast<LmTokenId>(vocab_.size()));
  if (inserted) vocab_.emplace_back(token);
  return it->second;
}

LMState NGramLM::BeginState(bool with_boundaries) const {
  LMState state;
  if (with_boundaries && order_ > 1) {
    state.context[0] = bos_;
    state.size = 1;
  }
  return state;
}

const NGramLM::Entry* NGramLM::Find(const Key& key) const {
  if (key.size == 0 || key.size > order_) return nullptr;
  const Table& t = tables_[key.size - 1];
  auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

LMScore NGramLM::ScoreToken(const LMState& state, LmTokenId token) const {
  if (token < 0 || token >= vocab_size()) token = unk_;
  LMScore result;
  LmTokenId buf[kMaxLmOrder];
  const int ctx_len = std::min<int>(state.size, order_ - 1);
  const LmTokenId* ctx = state.context.data() + (state.size - ctx_len);
  double backoff = 0.0;
  bool found = false;
  for (int k = ctx_len; k >= 0; --k) {
    std::copy(ctx + (ctx_len - k), ctx + ctx_len, buf);
    buf[k] = token;
    if (const Entry* e = Find(MakeKey(buf, k + 1))) {
      result.log10_prob = backoff + e->log10_prob;
      found = true;
      break;
    }
    if (k > 0) {
      if (const Entry* c = Find(MakeKey(buf, k))) backoff += c->log10_backoff;
    }
  }
  if (!found) result.log10_prob = backoff + kLog10Zero;

  // Next state: the last (order - 1) tokens.
  if (order_ > 1) {
    int keep = std::min<int>(state.size, order_ - 2);
    std::copy(state.context.begin() + (state.size - keep),
              state.context.begin() + state.size, result.next.context.begin());
    result.next.context[keep] = token;
    result.next.size = static_cast<uint8_t>(keep + 1);
  }
  return result;
}

NGramLM TrainNGramTokens(const std::vector<std::vector<std::string>>& sentences,
                         int order, double discount) {
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "discount must be in [0, 1)");
  }
  if (sentences.empty()) throw Error(ErrorCode::kEmptyCorpus, "no sentences");
  NGramLM lm(order);
  // Assign vocabulary ids in sorted order so the model is independent of
  // corpus line order.
  std::set<std::string> words;
  for (const auto& s : sentences) {
    for (const auto& w : s) words.insert(w);
  }
  for (const auto& w : words) lm.AddToken(w);

  // counts[k - 1]: k-gram -> count.
  std::vector<std::map<std::vector<LmTokenId>, double>> counts(order);
  std::vector<LmTokenId> seq;
  for (const auto& s : sentences) {
    seq.assign(1, lm.bos());
    for (const auto& w : s) seq.push_back(lm.Id(w));
    seq.push_back(lm.eos());
    for (size_t i = 1; i < seq.size(); ++i) {
      for (int k = 1; k <= order && static_cast<int>(i) - k + 1 >= 0; ++k) {
        std::vector<LmTokenId> gram(seq.begin() + (i - k + 1),
                                    seq.begin() + i + 1);
        counts[k - 1][gram] += 1.0;
      }
    }
  }

  // Context statistics for every order: context (k-1 tokens) -> stats.
  std::vector<std::map<std::vector<LmTokenId>, ContextStats>> ctx_stats(order);
  for (int k = 1; k <= order; ++k) {
    for (const auto& [gram, c] : counts[k - 1]) {
      std::vector<LmTokenId> ctx(gram.begin(), gram.end() - 1);
      auto& st = ctx_stats[k - 1][ctx];
      st.total += c;
      st.distinct += 1;
    }
  }

  // Unigrams: every predictable token (all but <s>), including <unk>.
  const auto& uni_stats = ctx_stats[0][{}];
  std::vector<double> lower(lm.vocab_size(), 0.0);
  const double predictable = lm.vocab_size() - 1;
  const double uni_mass = discount * uni_stats.distinct / uni_stats.total;
  for (LmTokenId w = 0; w < lm.vocab_size(); ++w) {
    if (w == lm.bos()) continue;
    auto it = counts[0].find({w});
    double c = it == counts[0].end() ? 0.0 : it->second;
    lower[w] = std::max(c - discount, 0.0) / uni_stats.total +
               uni_mass / predictable;
  }
  auto& uni = lm.mutable_table(1);
  for (LmTokenId w = 0; w < lm.vocab_size(); ++w) {
    NGramLM::Entry e;
    e.log10_prob = w == lm.bos() ? kLog10Zero : SafeLog10(lower[w]);
    uni[MakeKey(&w, 1)] = e;
  }

  // Linear-domain probabilities of the previous order, for interpolation.
  std::map<std::vector<LmTokenId>, double> prev_prob;
  for (LmTokenId w = 0; w < lm.vocab_size(); ++w) prev_prob[{w}] = lower[w];

  for (int k = 2; k <= order; ++k) {
    std::map<std::vector<LmTokenId>, double> cur_prob;
    for (const auto& [gram, c] : counts[k - 1]) {
      std::vector<LmTokenId> ctx(gram.begin(), gram.end() - 1);
      const auto& st = ctx_stats[k - 1].at(ctx);
      const double gamma = discount * st.distinct / st.total;
      std::vector<LmTokenId> suffix(gram.begin() + 1, gram.end());
      const double p =
          std::max(c - discount, 0.0) / st.total + gamma * prev_prob.at(suffix);
      cur_prob[gram] = p;
      NGramLM::Entry e;
      e.log10_prob = SafeLog10(p);
      lm.mutable_table(k)[MakeKey(gram.data(), k)] = e;
    }
    // Backoff weights live on the (k-1)-gram that serves as context.
    for (const auto& [ctx, st] : ctx_stats[k - 1]) {
      auto* entry = &lm.mutable_table(k - 1)[MakeKey(ctx.data(), k - 1)];
      entry->log10_backoff = SafeLog10(discount * st.distinct / st.total);
      entry->has_backoff = true;
    }
    prev_prob = std::move(cur_prob);
  }
  return lm;
}

NGramLM TrainNGram(const std::vector<std::string>& lines, int order,
                   double discount) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& line : lines) {
    std::vector<std::string> tokens;
    for (auto& ch : SplitUtf8(line)) {
      if (Trim(ch).empty()) continue;
      tokens.push_back(std::move(ch));
    }
    sentences.push_back(std::move(tokens));
  }
  return TrainNGramTokens(sentences, order, discount);
}

double ScoreSequence(const NGramLM& lm, const std::vector<LmTokenId>& tokens,
                     bool with_boundaries) {
  LMState state = lm.BeginState(with_boundaries);
  double total = 0.0;
  for (LmTokenId t : tokens) {
    LMScore s = lm.ScoreToken(state, t);
    total += s.log10_prob;
    state = s.next;
  }
  if (with_boundaries) total += lm.ScoreToken(state, lm.eos()).log10_prob;
  return total;
}

double ScoreSequence(const NGramLM& lm, const std::vector<std::string>& tokens,
                     bool with_boundaries) {
  std::vector<LmTokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(lm.Id(t));
  return ScoreSequence(lm, ids, with_boundaries);
}

std::string FormatArpa(const NGramLM& lm) {
  std::ostringstream out;
  out << "\n\\data\\\n";
  for (int k = 1; k <= lm.order(); ++k) {
    out << "ngram " << k << "=" << lm.table(k).size() << "\n";
  }
  for (int k = 1; k <= lm.order(); ++k) {
    out << "\n\\" << k << "-grams:\n";
    std::vector<std::pair<std::vector<std::string>, const NGramLM::Entry*>>
        rows;
    rows.reserve(lm.table(k).size());
    for (const auto& [key, entry] : lm.table(k)) {
      std::vector<std::string> words;
      for (int i = 0; i < key.size; ++i) words.push_back(lm.Token(key.ids[i]));
      rows.emplace_back(std::move(words), &entry);
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [words, entry] : rows) {
      out << FormatDouble(entry->log10_prob);
      for (size_t i = 0; i < words.size(); ++i) {
        out << (i == 0 ? '\t' : ' ') << words[i];
      }
      if (entry->has_backoff) out << '\t' << FormatDouble(entry->log10_backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  return out.str();
}

NGramLM ParseArpa(std::string_view text) {
  std::vector<std::string> lines = SplitString(text, '\n');
  size_t i = 0;
  auto bad = [&](const std::string& msg) {
    return Error(ErrorCode::kBadFormat,
                 "ARPA line " + std::to_string(i + 1) + ": " + msg);
  };
  while (i < lines.size() && Trim(lines[i]) != "\\data\\") ++i;
  if (i == lines.size()) throw bad("missing \\data\\ header");
  ++i;
  std::vector<size_t> declared;
  for (; i < lines.size(); ++i) {
    std::string_view line = Trim(lines[i]);
    if (line.empty()) continue;
    if (line.rfind("ngram ", 0) != 0) break;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw bad("malformed ngram count");
    long k = ParseInt(line.substr(6, eq - 6));
    if (k != static_cast<long>(declared.size()) + 1) {
      throw bad("ngram orders out of sequence");
    }
    declared.push_back(static_cast<size_t>(ParseInt(line.substr(eq + 1))));
  }
  if (declared.empty()) throw bad("no ngram counts");
  const int order = static_cast<int>(declared.size());
  NGramLM lm(order);

  struct Row {
    std::vector<std::string> words;
    double prob;
    bool has_bow;
    double bow;
  };
  std::vector<std::vector<Row>> sections(order);
  int current = 0;
  bool ended = false;
  for (; i < lines.size(); ++i) {
    std::string_view line = Trim(lines[i]);
    if (line.empty()) continue;
    if (line == "\\end\\") {
      ended = true;
      break;
    }
    if (line.front() == '\\') {
      auto dash = line.find("-grams:");
      if (dash == std::string_view::npos) throw bad("unknown section");
      current = static_cast<int>(ParseInt(line.substr(1, dash - 1)));
      if (current < 1 || current > order) throw bad("section out of range");
      continue;
    }
    if (current == 0) throw bad("entry outside a section");
    auto fields = SplitWhitespace(line);
    const size_t need = static_cast<size_t>(current) + 1;
    if (fields.size() != need && fields.size() != need + 1) {
      throw bad("wrong field count");
    }
    Row row;
    row.prob = ParseDouble(fields[0]);
    row.words.assign(fields.begin() + 1, fields.begin() + need);
    row.has_bow = fields.size() == need + 1;
    row.bow = row.has_bow ? ParseDouble(fields[need]) : 0.0;
    sections[current - 1].push_back(std::move(row));
  }
  if (!ended) throw bad("missing \\end\\");
  for (int k = 1; k <= order; ++k) {
    if (sections[k - 1].size() != declared[k - 1]) {
      throw Error(ErrorCode::kBadFormat,
                  "ARPA " + std::to_string(k) + "-gram count mismatch: " +
                      "declared " + std::to_string(declared[k - 1]) +
                      ", found " + std::to_string(sections[k - 1].size()));
    }
  }
  for (const auto& row : sections[0]) lm.AddToken(row.words[0]);
  for (int k = 1; k <= order; ++k) {
    for (const auto& row : sections[k - 1]) {
      NGramLM::Key key;
      key.size = static_cast<uint8_t>(k);
      for (int j = 0; j < k; ++j) {
        LmTokenId id = lm.Id(row.words[j]);
        if (id == lm.unk() && row.words[j] != "<unk>") {
          throw Error(ErrorCode::kBadFormat,
                      "n-gram uses unknown word " + row.words[j]);
        }
        key.ids[j] = id;
      }
      NGramLM::Entry e;
      e.log10_prob = row.prob;
      e.has_backoff = row.has_bow;
      e.log10_backoff = row.bow;
      lm.mutable_table(k)[key] = e;
    }
  }
  // Special tokens without an explicit unigram can never be predicted.
  for (LmTokenId special : {lm.unk(), lm.bos(), lm.eos()}) {
    NGramLM::Key key;
    key.size = 1;
    key.ids[0] = special;
    lm.mutable_table(1).try_emplace(key, NGramLM::Entry{});
  }
  return lm;
}

void WriteArpa(const NGramLM& lm, const std::filesystem::path& path) {
  WriteFile(path, FormatArpa(lm));
}

NGramLM ReadArpa(const std::filesystem::path& path) {
  return ParseArpa(ReadFile(path));
}

}  // namespace kwspot
