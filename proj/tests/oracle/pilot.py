#!/usr/bin/env python3
# Copyright 2026 The dpaudit Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Independent oracle for the epsilon lower-bound estimator.

Computes, with scipy (exact binomial tails + Brent root finding, fully
independent of the C++ implementation):

  1. golden values for eps_lower_bound frozen into the unit and acceptance
     tests, and
  2. the null distribution of the best-over-grid eps_max when scores are
     independent of membership, used to pin the null-safety thresholds.

Run:  python3 tests/oracle/pilot.py [--sims N]
"""

import argparse
import functools

import numpy as np
from scipy import optimize, stats

ALPHA = 0.05
EPS_CAP = 50.0
BISECT_TOL = 1e-4


def success_prob(eps: float, arity: int) -> float:
    e = np.exp(eps)
    return e / (e + arity - 1)


def tail(k: int, c: int, eps: float, arity: int) -> float:
    # P[Binomial(k, p(eps)) >= c]
    return stats.binom.sf(c - 1, k, success_prob(eps, arity))


@functools.lru_cache(maxsize=None)
def eps_lower_bound(k: int, c: int, arity: int, alpha: float = ALPHA) -> float:
    if k == 0 or c == 0:
        return 0.0
    if tail(k, c, 0.0, arity) >= alpha:
        return 0.0
    hi = 1.0
    while tail(k, c, hi, arity) < alpha and hi < EPS_CAP:
        hi = min(2 * hi, EPS_CAP)
    return optimize.brentq(lambda e: tail(k, c, e, arity) - alpha, 0.0, hi,
                           xtol=BISECT_TOL)


def sweep_grid(max_budget: int, step: int = 10):
    grid = list(range(step, max_budget + 1, step))
    if not grid or grid[-1] != max_budget:
        grid.append(max_budget)
    return grid


def null_trial(rng: np.random.Generator, m: int):
    """One trial at the null: scores independent of membership, both games."""
    half = m // 2
    s_in = np.zeros(m, dtype=bool)
    s_in[rng.permutation(m)[:half]] = True
    y = rng.standard_normal(m)

    # Binary game: rank once, take top b/2 as IN guesses and bottom b/2 as
    # OUT guesses for every budget b in the grid.
    order = np.argsort(-y, kind="stable")
    best_or = 0.0
    for b in sweep_grid(m):
        kp = km = b // 2
        if kp == 0:
            continue
        correct = int(np.sum(s_in[order[:kp]])) + int(np.sum(~s_in[order[m - km:]]))
        best_or = max(best_or, eps_lower_bound(kp + km, correct, 2))

    # Paired (arity-2) game: guess the higher-scoring element of each pair,
    # keep the k largest-margin pairs.
    n_sets = m // 2
    u = rng.integers(0, 2, size=n_sets)
    pair_scores = y.reshape(n_sets, 2)
    guess = np.argmax(pair_scores, axis=1)
    margin = np.abs(pair_scores[:, 0] - pair_scores[:, 1])
    rank = np.argsort(-margin, kind="stable")
    hits = (guess == u)[rank]
    best_fdp = 0.0
    for k in sweep_grid(n_sets):
        correct = int(np.sum(hits[:k]))
        best_fdp = max(best_fdp, eps_lower_bound(k, correct, 2))

    return max(best_or, best_fdp)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sims", type=int, default=2000)
    ap.add_argument("--m", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20260809)
    args = ap.parse_args()

    print("== golden eps lower bounds (alpha = 0.05) ==")
    for k, c, arity in [(10, 10, 2), (1, 1, 100), (100, 90, 2), (100, 50, 2),
                        (2000, 2000, 2)]:
        print(f"eps_lb(k={k}, c={c}, K={arity}) = "
              f"{eps_lower_bound(k, c, arity):.6f}")

    print("\n== closed-form cross-checks ==")
    p = ALPHA ** (1.0 / 10.0)
    print(f"k=10,c=10,K=2 closed form ln(p/(1-p)), p=0.05^(1/10): "
          f"{np.log(p / (1 - p)):.6f}")
    print(f"k=1,c=1,K=100 closed form ln(0.05*99/0.95):            "
          f"{np.log(ALPHA * 99 / (1 - ALPHA)):.6f}")

    rng = np.random.default_rng(args.seed)
    vals = np.array([null_trial(rng, args.m) for _ in range(args.sims)])
    print(f"\n== null pilot: m={args.m}, both games, grid step 10, "
          f"{args.sims} sims ==")
    print(f"mean best eps_max   = {vals.mean():.6f}")
    print(f"sd   best eps_max   = {vals.std(ddof=1):.6f}")
    print(f"median best eps_max = {np.median(vals):.6f}")
    print(f"p95  best eps_max   = {np.quantile(vals, 0.95):.6f}")
    print(f"max  best eps_max   = {vals.max():.6f}")
    print(f"frac zero           = {(vals == 0).mean():.4f}")


if __name__ == "__main__":
    main()
