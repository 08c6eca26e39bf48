// Copyright 2026 The dpaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPAUDIT_GAME_HPP_
#define DPAUDIT_GAME_HPP_

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dpaudit/common.hpp"
#include "dpaudit/estimator.hpp"
#include "dpaudit/prng.hpp"

namespace dpaudit {

// The two guessing games, from canary selection through guess tally.
// Score convention throughout: larger score means "more likely IN".

// Binary membership game state. s[i] = +1 if canary i trained, -1
// otherwise; exactly m/2 entries are +1.
struct BinaryGameState {
  std::vector<std::int8_t> s;
  int m = 0;  // canaries
  int r = 0;  // non-auditing examples (always IN)
  int n = 0;  // training set size, r + m/2

  void Validate() const {
    if (static_cast<int>(s.size()) != m) {
      throw ConfigError("BinaryGameState: selection size != m");
    }
    if (m % 2 != 0) throw ConfigError("BinaryGameState: m must be even");
    int plus = 0;
    for (auto v : s) {
      if (v != 1 && v != -1) {
        throw ConfigError("BinaryGameState: entries must be +-1");
      }
      plus += v == 1 ? 1 : 0;
    }
    if (plus != m / 2) {
      throw ConfigError("BinaryGameState: exactly m/2 canaries must be IN");
    }
    if (n != r + m / 2) throw ConfigError("BinaryGameState: n != r + m/2");
  }
};

// K-ary reconstruction game state. Canary set i consists of the canaries
// canary_index[i*K + j], j in [0, K); selected[i] is the slot that trained.
struct KaryGameState {
  int num_sets = 0;  // M
  int arity = 0;     // K
  std::vector<int> selected;      // u, 0-based slots
  std::vector<int> canary_index;  // M x K, row-major

  void Validate() const {
    if (num_sets < 1 || arity < 1) {
      throw ConfigError("KaryGameState: need M, K >= 1");
    }
    if (static_cast<int>(selected.size()) != num_sets ||
        static_cast<int>(canary_index.size()) != num_sets * arity) {
      throw ConfigError("KaryGameState: selection/index sizes inconsistent");
    }
    for (int u : selected) {
      if (u < 0 || u >= arity) {
        throw ConfigError("KaryGameState: selected slot out of range");
      }
    }
  }
};

struct PartitionResult {
  BinaryGameState state;
  // Dataset indices that train: the +1 canaries plus all r non-auditing
  // examples (canaries occupy [0, m), non-auditing [m, m + r)).
  std::vector<int> in_indices;
};

// Uniformly random half of the canaries get S = +1; every non-auditing
// example is IN.
inline PartitionResult PartitionBinary(int m, int r, Rng& rng) {
  if (m < 2 || m % 2 != 0) {
    throw ConfigError("PartitionBinary: m must be even and >= 2");
  }
  if (r < 0) throw ConfigError("PartitionBinary: r must be >= 0");
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (int i = m - 1; i > 0; --i) {
    std::swap(order[i], order[rng.Below(static_cast<std::uint64_t>(i) + 1)]);
  }
  PartitionResult result;
  result.state.m = m;
  result.state.r = r;
  result.state.n = r + m / 2;
  result.state.s.assign(m, -1);
  for (int i = 0; i < m / 2; ++i) result.state.s[order[i]] = 1;
  for (int i = 0; i < m; ++i) {
    if (result.state.s[i] == 1) result.in_indices.push_back(i);
  }
  for (int i = 0; i < r; ++i) result.in_indices.push_back(m + i);
  return result;
}

// i.i.d. uniform slots over [0, K); one per canary set.
inline std::vector<int> SelectKary(int num_sets, int arity, Rng& rng) {
  if (num_sets < 1 || arity < 1) throw ConfigError("SelectKary: M, K >= 1");
  std::vector<int> u(num_sets);
  for (int& v : u) {
    v = arity == 1 ? 0 : static_cast<int>(rng.Below(arity));
  }
  return u;
}

// Builds the K-ary game over contiguous canary sets: set i holds canaries
// [i*K, (i+1)*K).
inline KaryGameState MakeKaryState(int num_canaries, int arity, Rng& rng) {
  if (arity < 1 || num_canaries < arity || num_canaries % arity != 0) {
    throw ConfigError("MakeKaryState: m must be a positive multiple of K");
  }
  KaryGameState st;
  st.num_sets = num_canaries / arity;
  st.arity = arity;
  st.selected = SelectKary(st.num_sets, arity, rng);
  st.canary_index.resize(num_canaries);
  std::iota(st.canary_index.begin(), st.canary_index.end(), 0);
  return st;
}

// For K = 2 the set layout is also a valid binary selection: the chosen
// slot of each pair is IN, its partner OUT. Used when one release feeds
// both games.
inline BinaryGameState DeriveBinaryFromKary(const KaryGameState& kary) {
  kary.Validate();
  if (kary.arity != 2) {
    throw ConfigError("DeriveBinaryFromKary: requires K == 2");
  }
  BinaryGameState st;
  st.m = kary.num_sets * 2;
  st.r = 0;
  st.n = kary.num_sets;
  st.s.assign(st.m, -1);
  for (int i = 0; i < kary.num_sets; ++i) {
    st.s[kary.canary_index[2 * i + kary.selected[i]]] = 1;
  }
  return st;
}

// Guess vector of the binary game: t[i] in {-1, 0, +1}, with exactly
// k_plus entries +1 and k_minus entries -1.
struct GuessVectorBinary {
  std::vector<std::int8_t> t;
  int k_plus = 0;
  int k_minus = 0;
};

inline constexpr int kAbstain = -1;

// Guess vector of the K-ary game: v[i] is the guessed slot, kAbstain to
// pass; exactly `guesses` entries are non-abstain.
struct GuessVectorKary {
  std::vector<int> v;
  int guesses = 0;
};

namespace internal {

// Indices of y sorted by descending score; ties keep the lower index first.
inline std::vector<int> DescendingOrder(std::span<const double> y) {
  std::vector<int> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return y[a] > y[b]; });
  return order;
}

}  // namespace internal

// Exact maximizer of sum_i t_i * y_i over guess vectors with k_plus +1s
// and k_minus -1s: +1 on the k_plus highest scores, -1 on the k_minus
// lowest. One stable descending ranking decides ties (lower index ranks
// first), so the two sides never collide.
inline GuessVectorBinary GuessBinary(std::span<const double> y, int k_plus,
                                     int k_minus) {
  const int m = static_cast<int>(y.size());
  if (k_plus < 0 || k_minus < 0 || k_plus + k_minus > m) {
    throw ConfigError("GuessBinary: guess budget exceeds m");
  }
  GuessVectorBinary guess;
  guess.k_plus = k_plus;
  guess.k_minus = k_minus;
  guess.t.assign(m, 0);
  const auto order = internal::DescendingOrder(y);
  for (int i = 0; i < k_plus; ++i) guess.t[order[i]] = 1;
  for (int i = 0; i < k_minus; ++i) guess.t[order[m - 1 - i]] = -1;
  return guess;
}

// Per set: candidate guess is the argmax slot (ties to the lower slot);
// sets are ranked by margin (top score minus runner-up) and only the
// `guesses` largest-margin sets keep their guess. K == 1 degenerates to
// guessing slot 0 everywhere.
inline GuessVectorKary GuessKary(std::span<const double> y, int num_sets,
                                 int arity, int guesses) {
  if (num_sets < 1 || arity < 1) throw ConfigError("GuessKary: M, K >= 1");
  if (static_cast<int>(y.size()) != num_sets * arity) {
    throw ConfigError("GuessKary: score matrix must be M x K");
  }
  if (guesses < 0 || guesses > num_sets) {
    throw ConfigError("GuessKary: guess budget exceeds M");
  }
  std::vector<int> candidate(num_sets, 0);
  std::vector<double> margin(num_sets,
                             std::numeric_limits<double>::infinity());
  for (int i = 0; i < num_sets; ++i) {
    const double* row = y.data() + static_cast<std::size_t>(i) * arity;
    int best = 0;
    for (int j = 1; j < arity; ++j) {
      if (row[j] > row[best]) best = j;
    }
    candidate[i] = best;
    if (arity > 1) {
      double second = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < arity; ++j) {
        if (j != best) second = std::max(second, row[j]);
      }
      margin[i] = row[best] - second;
    }
  }
  std::vector<int> rank(num_sets);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(),
                   [&](int a, int b) { return margin[a] > margin[b]; });
  GuessVectorKary guess;
  guess.guesses = guesses;
  guess.v.assign(num_sets, kAbstain);
  for (int i = 0; i < guesses; ++i) guess.v[rank[i]] = candidate[rank[i]];
  return guess;
}

// k = number of guesses, c = number agreeing with the true selection.
inline AuditOutcome TallyBinary(std::span<const std::int8_t> s,
                                const GuessVectorBinary& guess,
                                double alpha = 0.05) {
  if (s.size() != guess.t.size()) {
    throw ConfigError("TallyBinary: selection/guess size mismatch");
  }
  AuditOutcome outcome;
  outcome.arity = 2;
  outcome.alpha = alpha;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (guess.t[i] == 0) continue;
    ++outcome.guesses;
    if (guess.t[i] == s[i]) ++outcome.correct;
  }
  return outcome;
}

inline AuditOutcome TallyKary(std::span<const int> u,
                              const GuessVectorKary& guess, int arity,
                              double alpha = 0.05) {
  if (u.size() != guess.v.size()) {
    throw ConfigError("TallyKary: selection/guess size mismatch");
  }
  AuditOutcome outcome;
  outcome.arity = arity;
  outcome.alpha = alpha;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (guess.v[i] == kAbstain) continue;
    if (guess.v[i] < 0 || guess.v[i] >= arity) {
      throw ConfigError("TallyKary: guess slot out of range");
    }
    ++outcome.guesses;
    if (guess.v[i] == u[i]) ++outcome.correct;
  }
  return outcome;
}

}  // namespace dpaudit

#endif  // DPAUDIT_GAME_HPP_
