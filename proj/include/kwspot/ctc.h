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

#ifndef KWSPOT_CTC_H_
#define KWSPOT_CTC_H_

// CTC recursions over a T x V log-posterior matrix. Everything here takes an
// Eigen expression, so a frame window is just `logp.middleRows(start, n)`.
// Accumulation is always done in double, whatever the input scalar.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kwspot/error.h"
#include "kwspot/units.h"

namespace kwspot {

template <typename Scalar>
using LogProbMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Floor used instead of log(0) so the recursions never see -inf - -inf.
inline constexpr double kLogZero = -1e4;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double LogAddExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// Minimum number of frames a label sequence needs: one per label plus one
// separating blank between every pair of equal neighbours.
inline int CtcMinFrames(const UnitSeq& labels) {
  int n = static_cast<int>(labels.size());
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++n;
  }
  return n;
}

namespace internal {

// Expanded state s: even = blank, odd = labels[(s - 1) / 2].
inline UnitId StateUnit(const UnitSeq& labels, int s) {
  return (s % 2 == 0) ? kBlankId : labels[(s - 1) / 2];
}

inline bool CanSkip(const UnitSeq& labels, int s) {
  return s >= 2 && s % 2 == 1 && labels[(s - 1) / 2] != labels[(s - 3) / 2];
}

inline void CheckFeasible(int frames, const UnitSeq& labels) {
  int need = CtcMinFrames(labels);
  if (frames < need) {
    throw Error(ErrorCode::kAlignmentInfeasible,
                std::to_string(labels.size()) + " labels need " +
                    std::to_string(need) + " frames, have " +
                    std::to_string(frames));
  }
}

}  // namespace internal

// log of the summed probability of every frame path whose CTC collapse is
// exactly `labels`. Throws kAlignmentInfeasible if there are too few frames.
template <typename Derived>
double CtcForwardLogProb(const Eigen::MatrixBase<Derived>& logp,
                         const UnitSeq& labels) {
  const int frames = static_cast<int>(logp.rows());
  internal::CheckFeasible(frames, labels);
  const int states = 2 * static_cast<int>(labels.size()) + 1;
  if (frames == 0) return 0.0;  // only reachable with empty labels

  std::vector<double> alpha(states, kNegInf), next(states, kNegInf);
  alpha[0] = logp(0, kBlankId);
  if (states > 1) alpha[1] = logp(0, labels[0]);
  for (int t = 1; t < frames; ++t) {
    // A state more than 2 * t + 1 positions in is unreachable at frame t.
    const int hi = std::min(states, 2 * t + 2);
    for (int s = 0; s < hi; ++s) {
      double acc = alpha[s];
      if (s >= 1) acc = LogAddExp(acc, alpha[s - 1]);
      if (internal::CanSkip(labels, s)) acc = LogAddExp(acc, alpha[s - 2]);
      next[s] = acc == kNegInf
                    ? kNegInf
                    : acc + logp(t, internal::StateUnit(labels, s));
    }
    std::fill(next.begin() + hi, next.end(), kNegInf);
    std::swap(alpha, next);
  }
  double total = alpha[states - 1];
  if (states > 1) total = LogAddExp(total, alpha[states - 2]);
  return total;
}

struct CtcPath {
  double log_score = kNegInf;
  // Per frame: index of the label the frame is assigned to, -1 for blank.
  std::vector<int> frame_label;
};

// Single best frame path collapsing to `labels`. Ties prefer the path that
// stays in the earlier state.
template <typename Derived>
CtcPath CtcViterbi(const Eigen::MatrixBase<Derived>& logp,
                   const UnitSeq& labels) {
  const int frames = static_cast<int>(logp.rows());
  internal::CheckFeasible(frames, labels);
  const int states = 2 * static_cast<int>(labels.size()) + 1;
  CtcPath path;
  if (frames == 0) {
    path.log_score = 0.0;
    return path;
  }

  std::vector<double> delta(states, kNegInf), next(states, kNegInf);
  // back[t * states + s] = predecessor state at t - 1.
  std::vector<int> back(static_cast<size_t>(frames) * states, -1);
  delta[0] = logp(0, kBlankId);
  if (states > 1) delta[1] = logp(0, labels[0]);
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < states; ++s) {
      double best = delta[s];
      int arg = s;
      if (s >= 1 && delta[s - 1] > best) {
        best = delta[s - 1];
        arg = s - 1;
      }
      if (internal::CanSkip(labels, s) && delta[s - 2] > best) {
        best = delta[s - 2];
        arg = s - 2;
      }
      next[s] = best == kNegInf
                    ? kNegInf
                    : best + logp(t, internal::StateUnit(labels, s));
      back[static_cast<size_t>(t) * states + s] = arg;
    }
    std::swap(delta, next);
  }
  int s = states - 1;
  if (states > 1 && delta[states - 2] > delta[states - 1]) s = states - 2;
  path.log_score = delta[s];
  path.frame_label.assign(frames, -1);
  for (int t = frames - 1; t >= 0; --t) {
    path.frame_label[t] = (s % 2 == 1) ? (s - 1) / 2 : -1;
    if (t > 0) s = back[static_cast<size_t>(t) * states + s];
  }
  return path;
}

}  // namespace kwspot

#endif  // KWSPOT_CTC_H_
