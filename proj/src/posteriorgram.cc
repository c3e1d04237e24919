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

#include "kwspot/posteriorgram.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "json.hpp"
#include "kwspot/error.h"
#include "kwspot/io_util.h"

namespace kwspot {

namespace {

constexpr char kMagic[4] = {'B', 'K', 'W', 'S'};
constexpr uint16_t kVersion = 1;

void PutU16(std::string* out, uint16_t v) {
  out->push_back(static_cast<char>(v & 0xFF));
  out->push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>(v >> (8 * i)));
}

void PutU64(std::string* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back(static_cast<char>(v >> (8 * i)));
}

void PutString(std::string* out, const std::string& s) {
  if (s.size() > 0xFFFF) throw Error(ErrorCode::kBadFormat, "string too long");
  PutU16(out, static_cast<uint16_t>(s.size()));
  out->append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  uint64_t Uint(int width) {
    Need(width);
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += width;
    return v;
  }

  std::string String() {
    size_t len = Uint(2);
    Need(len);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }

  void Need(size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorCode::kBadFormat, "truncated posteriorgram");
    }
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

float FloorLog(double p) {
  if (p <= 0.0) return static_cast<float>(kLogZero);
  return static_cast<float>(std::max(std::log(p), kLogZero));
}

}  // namespace

void ValidatePosteriorgram(const Posteriorgram& pg) {
  for (int t = 0; t < pg.num_frames(); ++t) {
    double acc = kNegInf;
    for (int v = 0; v < pg.num_units(); ++v) {
      float x = pg.logp(t, v);
      if (std::isnan(x) || x > 1e-6f) {
        throw Error(ErrorCode::kBadFormat,
                    "frame " + std::to_string(t) + " unit " +
                        std::to_string(v) + " has invalid log posterior");
      }
      acc = LogAddExp(acc, x);
    }
    if (!(std::abs(acc) <= 1e-3)) {
      throw Error(ErrorCode::kBadFormat, "frame " + std::to_string(t) +
                                             " is not normalized (logsumexp " +
                                             std::to_string(acc) + ")");
    }
  }
}

std::string EncodePosteriorgram(const Posteriorgram& pg) {
  ValidatePosteriorgram(pg);
  std::string out(kMagic, 4);
  PutU16(&out, kVersion);
  PutString(&out, pg.utt_id);
  PutString(&out, pg.unit_set_id);
  PutU64(&out, std::bit_cast<uint64_t>(pg.frame_period_s));
  PutU32(&out, static_cast<uint32_t>(pg.num_frames()));
  PutU32(&out, static_cast<uint32_t>(pg.num_units()));
  out.reserve(out.size() + 4 * static_cast<size_t>(pg.logp.size()));
  for (int t = 0; t < pg.num_frames(); ++t) {
    for (int v = 0; v < pg.num_units(); ++v) {
      PutU32(&out, std::bit_cast<uint32_t>(pg.logp(t, v)));
    }
  }
  return out;
}

Posteriorgram DecodePosteriorgram(std::string_view bytes) {
  Reader in(bytes);
  in.Need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kBadFormat, "bad magic");
  }
  in.Uint(4);
  uint64_t version = in.Uint(2);
  if (version != kVersion) {
    throw Error(ErrorCode::kBadFormat,
                "unsupported version " + std::to_string(version));
  }
  Posteriorgram pg;
  pg.utt_id = in.String();
  pg.unit_set_id = in.String();
  pg.frame_period_s = std::bit_cast<double>(in.Uint(8));
  uint64_t frames = in.Uint(4);
  uint64_t units = in.Uint(4);
  in.Need(4 * frames * units);
  pg.logp.resize(static_cast<Eigen::Index>(frames),
                 static_cast<Eigen::Index>(units));
  for (uint64_t t = 0; t < frames; ++t) {
    for (uint64_t v = 0; v < units; ++v) {
      pg.logp(t, v) = std::bit_cast<float>(static_cast<uint32_t>(in.Uint(4)));
    }
  }
  if (!in.AtEnd()) throw Error(ErrorCode::kBadFormat, "trailing bytes");
  ValidatePosteriorgram(pg);
  return pg;
}

std::string PosteriorgramToJson(const Posteriorgram& pg) {
  nlohmann::json j;
  j["utt_id"] = pg.utt_id;
  j["unit_set_id"] = pg.unit_set_id;
  j["frame_period_s"] = pg.frame_period_s;
  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < pg.num_frames(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int v = 0; v < pg.num_units(); ++v) {
      row.push_back(static_cast<double>(pg.logp(t, v)));
    }
    rows.push_back(std::move(row));
  }
  j["logp"] = std::move(rows);
  return j.dump();
}

Posteriorgram PosteriorgramFromJson(std::string_view text) {
  Posteriorgram pg;
  try {
    auto j = nlohmann::json::parse(text);
    pg.utt_id = j.at("utt_id").get<std::string>();
    pg.unit_set_id = j.at("unit_set_id").get<std::string>();
    pg.frame_period_s = j.value("frame_period_s", kDefaultFramePeriod);
    const auto& rows = j.at("logp");
    const size_t frames = rows.size();
    const size_t units = frames ? rows.at(0).size() : 0;
    pg.logp.resize(static_cast<Eigen::Index>(frames),
                   static_cast<Eigen::Index>(units));
    for (size_t t = 0; t < frames; ++t) {
      if (rows[t].size() != units) {
        throw Error(ErrorCode::kBadFormat, "ragged logp rows");
      }
      for (size_t v = 0; v < units; ++v) {
        pg.logp(t, v) = static_cast<float>(rows[t][v].get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadFormat, e.what());
  }
  ValidatePosteriorgram(pg);
  return pg;
}

void WritePosteriorgram(const Posteriorgram& pg,
                        const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    ValidatePosteriorgram(pg);
    WriteFile(path, PosteriorgramToJson(pg));
  } else {
    WriteFile(path, EncodePosteriorgram(pg));
  }
}

Posteriorgram ReadPosteriorgram(const std::filesystem::path& path) {
  std::string bytes = ReadFile(path);
  std::string_view trimmed = Trim(bytes);
  if (!trimmed.empty() && trimmed.front() == '{') {
    return PosteriorgramFromJson(bytes);
  }
  return DecodePosteriorgram(bytes);
}

ConfusionTable LoadConfusionTable(const std::filesystem::path& path,
                                  const UnitSet& set) {
  ConfusionTable table;
  int line_no = 0;
  for (const auto& raw : ReadLines(path)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = SplitString(line, '\t');
    if (fields.size() != 3) {
      throw Error(ErrorCode::kBadFormat,
                  path.string() + ":" + std::to_string(line_no) +
                      ": expected unit<TAB>partner<TAB>weight");
    }
    double w = ParseDouble(fields[2]);
    if (!(w >= 0.0)) {
      throw Error(ErrorCode::kBadFormat, "negative confusion weight");
    }
    table[set.At(Trim(fields[0]))].push_back({set.At(Trim(fields[1])), w});
  }
  return table;
}

void WriteConfusionTable(const ConfusionTable& table, const UnitSet& set,
                         const std::filesystem::path& path) {
  std::vector<UnitId> keys;
  for (const auto& [k, _] : table) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::ostringstream out;
  out.precision(17);
  for (UnitId k : keys) {
    for (const auto& p : table.at(k)) {
      out << set.Symbol(k) << '\t' << set.Symbol(p.unit) << '\t' << p.weight
          << '\n';
    }
  }
  WriteFile(path, out.str());
}

std::vector<TokenSpan> SynthLayout(const UnitSeq& transcript,
                                   const SynthConfig& cfg) {
  std::vector<TokenSpan> spans;
  int frame = cfg.blank_gap;
  for (size_t i = 0; i < transcript.size(); ++i) {
    if (i > 0) {
      int gap = cfg.blank_gap;
      if (gap == 0 && transcript[i] == transcript[i - 1]) gap = 1;
      frame += gap;
    }
    TokenSpan span;
    span.token = transcript[i];
    span.start_frame = frame;
    span.end_frame = frame + cfg.frames_per_token;
    span.peak_frame = frame;
    spans.push_back(span);
    frame = span.end_frame;
  }
  return spans;
}

Posteriorgram SynthGenerate(const UnitSeq& transcript, const UnitSet& set,
                            const SynthConfig& cfg,
                            const std::string& utt_id) {
  if (cfg.frames_per_token < 1 || cfg.blank_gap < 0 || !(cfg.noise >= 0.0) ||
      !(cfg.noise < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad synth config");
  }
  const int units = set.size();
  for (UnitId u : transcript) {
    if (u == kBlankId) {
      throw Error(ErrorCode::kInvalidTranscript, "blank in transcript");
    }
    if (u < 0 || u >= units) {
      throw Error(ErrorCode::kInvalidTranscript, "unit id out of range");
    }
  }
  auto spans = SynthLayout(transcript, cfg);
  const int frames =
      (spans.empty() ? cfg.blank_gap : spans.back().end_frame) + cfg.blank_gap;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double band = std::min(cfg.noise, 1.0 - cfg.noise);

  std::vector<UnitId> target(frames, kBlankId);
  std::vector<double> severity(frames, cfg.noise);
  for (const auto& span : spans) {
    double e = cfg.noise > 0.0 ? cfg.noise + band * (2.0 * unif(rng) - 1.0)
                               : 0.0;
    for (int t = span.start_frame; t < span.end_frame; ++t) {
      target[t] = span.token;
      severity[t] = e;
    }
  }

  Posteriorgram pg;
  pg.utt_id = utt_id;
  pg.unit_set_id = set.id();
  pg.frame_period_s = cfg.frame_period_s;
  pg.logp.resize(frames, units);
  std::vector<double> row(units);
  for (int t = 0; t < frames; ++t) {
    const UnitId tgt = target[t];
    const double e = severity[t];
    std::fill(row.begin(), row.end(), 0.0);
    auto it = cfg.confusion.find(tgt);
    double wsum = 0.0;
    if (it != cfg.confusion.end()) {
      for (const auto& p : it->second) {
        if (p.unit != tgt) wsum += p.weight;
      }
    }
    if (wsum > 0.0) {
      for (const auto& p : it->second) {
        if (p.unit != tgt) row[p.unit] += e * p.weight / wsum;
      }
    } else if (units > 1) {
      std::fill(row.begin(), row.end(), e / (units - 1));
    }
    row[tgt] = 1.0 - e;
    for (int v = 0; v < units; ++v) pg.logp(t, v) = FloorLog(row[v]);
  }
  return pg;
}

GreedyResult GreedyPath(const Posteriorgram& pg) {
  GreedyResult result;
  result.frame_argmax.reserve(pg.num_frames());
  UnitId prev = kBlankId;
  for (int t = 0; t < pg.num_frames(); ++t) {
    Eigen::Index best = 0;
    pg.logp.row(t).maxCoeff(&best);
    UnitId u = static_cast<UnitId>(best);
    result.frame_argmax.push_back(u);
    if (u != kBlankId && u != prev) result.tokens.push_back(u);
    prev = u;
  }
  return result;
}

Alignment AlignViterbi(const Posteriorgram& pg, const UnitSeq& tokens) {
  CtcPath path = CtcViterbi(pg.logp, tokens);
  Alignment alignment;
  alignment.log_score = path.log_score;
  alignment.spans.resize(tokens.size());
  std::vector<bool> seen(tokens.size(), false);
  for (int t = 0; t < pg.num_frames(); ++t) {
    int k = path.frame_label[t];
    if (k < 0) continue;
    TokenSpan& span = alignment.spans[k];
    float lp = pg.logp(t, tokens[k]);
    if (!seen[k]) {
      seen[k] = true;
      span.token = tokens[k];
      span.start_frame = t;
      span.peak_frame = t;
      span.peak_logp = lp;
    } else if (lp > span.peak_logp) {
      span.peak_frame = t;
      span.peak_logp = lp;
    }
    span.end_frame = t + 1;
  }
  return alignment;
}

uint64_t StableHash(std::string_view s, uint64_t seed) {
  uint64_t h = 14695981039346656037ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace kwspot
