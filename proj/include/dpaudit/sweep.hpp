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

#ifndef DPAUDIT_SWEEP_HPP_
#define DPAUDIT_SWEEP_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dpaudit/estimator.hpp"
#include "dpaudit/game.hpp"

namespace dpaudit {

// Guess-budget sweep: bounds are estimated at every budget on the grid and
// the largest is reported alongside the full curve.

// Budgets step, 2*step, ..., plus the maximum itself if the grid does not
// land on it. A maximum below the step yields the single budget {max}.
inline std::vector<int> MakeSweepGrid(int max_budget, int step = 10) {
  if (max_budget < 1) throw ConfigError("MakeSweepGrid: max budget >= 1");
  if (step < 1) throw ConfigError("MakeSweepGrid: step >= 1");
  std::vector<int> grid;
  for (int b = step; b <= max_budget; b += step) grid.push_back(b);
  if (grid.empty() || grid.back() != max_budget) grid.push_back(max_budget);
  return grid;
}

struct SweepPoint {
  int budget = 0;
  std::int64_t guesses = 0;
  std::int64_t correct = 0;
  double eps = 0.0;
};

struct SweepResult {
  EpsLowerBound best;
  std::vector<SweepPoint> curve;
};

// Binary game sweep. Each budget splits evenly into k_plus = k_minus =
// budget / 2 (odd remainders rounded down). Ties in the best bound go to
// the smaller budget.
inline SweepResult SweepBinary(std::span<const std::int8_t> s,
                               std::span<const double> y,
                               std::span<const int> grid,
                               double alpha = 0.05) {
  if (s.size() != y.size()) {
    throw ConfigError("SweepBinary: scores/selection size mismatch");
  }
  if (grid.empty()) throw ConfigError("SweepBinary: empty budget grid");
  SweepResult result;
  result.best.method = BoundMethod::kOr;
  bool have_best = false;
  for (int budget : grid) {
    const int half = budget / 2;
    if (half < 1 || 2 * half > static_cast<int>(s.size())) {
      throw ConfigError("SweepBinary: budget outside [2, m]");
    }
    const GuessVectorBinary guess = GuessBinary(y, half, half);
    AuditOutcome outcome = TallyBinary(s, guess, alpha);
    const EpsLowerBound bound = EpsFromOutcome(outcome, BoundMethod::kOr);
    result.curve.push_back(
        {budget, outcome.guesses, outcome.correct, bound.eps});
    if (!have_best || bound.eps > result.best.eps) {
      result.best = bound;
      have_best = true;
    }
  }
  return result;
}

// K-ary game sweep over guess budgets.
inline SweepResult SweepKary(std::span<const int> u,
                             std::span<const double> y, int arity,
                             std::span<const int> grid, double alpha = 0.05) {
  if (grid.empty()) throw ConfigError("SweepKary: empty budget grid");
  const int num_sets = static_cast<int>(u.size());
  SweepResult result;
  result.best.method = BoundMethod::kOrFdp;
  bool have_best = false;
  for (int budget : grid) {
    if (budget < 1 || budget > num_sets) {
      throw ConfigError("SweepKary: budget outside [1, M]");
    }
    const GuessVectorKary guess = GuessKary(y, num_sets, arity, budget);
    AuditOutcome outcome = TallyKary(u, guess, arity, alpha);
    const EpsLowerBound bound = EpsFromOutcome(outcome, BoundMethod::kOrFdp);
    result.curve.push_back(
        {budget, outcome.guesses, outcome.correct, bound.eps});
    if (!have_best || bound.eps > result.best.eps) {
      result.best = bound;
      have_best = true;
    }
  }
  return result;
}

}  // namespace dpaudit

#endif  // DPAUDIT_SWEEP_HPP_
