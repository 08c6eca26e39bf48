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

#ifndef DPAUDIT_ESTIMATOR_HPP_
#define DPAUDIT_ESTIMATOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "dpaudit/common.hpp"

namespace dpaudit {

// Tally of one guessing game: k guesses, c of them correct, against canary
// sets of the given arity (2 for the binary membership game). alpha is the
// significance level of the derived bound (0.05 = 95% confidence).
struct AuditOutcome {
  std::int64_t guesses = 0;   // k
  std::int64_t correct = 0;   // c
  int arity = 2;              // K
  double alpha = 0.05;

  void Validate() const {
    if (guesses < 0 || correct < 0 || correct > guesses) {
      throw ConfigError("AuditOutcome: need 0 <= correct <= guesses, got c=" +
                        std::to_string(correct) + " k=" +
                        std::to_string(guesses));
    }
    if (arity < 2) throw ConfigError("AuditOutcome: arity must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw ConfigError("AuditOutcome: alpha must lie in (0, 1)");
    }
  }
};

// Which game produced a bound: the binary membership game (kOr) or the
// K-ary reconstruction game (kOrFdp). Both use the same binomial-dominance
// tail with success probability e^eps / (e^eps + K - 1); the tags differ
// only in which game's tally they summarize.
enum class BoundMethod { kOr, kOrFdp };

inline const char* BoundMethodName(BoundMethod m) {
  return m == BoundMethod::kOr ? "or" : "or_fdp";
}

struct EpsLowerBound {
  double eps = 0.0;
  AuditOutcome outcome;
  BoundMethod method = BoundMethod::kOr;
};

namespace internal {

// log of the binomial pmf term, i: number of successes.
inline double LogBinomTerm(std::int64_t k, std::int64_t i, double p) {
  return std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(i) + 1.0) -
         std::lgamma(static_cast<double>(k - i) + 1.0) +
         static_cast<double>(i) * std::log(p) +
         static_cast<double>(k - i) * std::log1p(-p);
}

// Sums binomial pmf terms for i in [lo, hi], iterating from the endpoint
// nearest the mode outward so terms are non-increasing. Log-space terms,
// Kahan-compensated linear accumulation relative to the largest term.
inline double SumBinomRange(std::int64_t k, std::int64_t lo, std::int64_t hi,
                            double p, bool descend_from_lo) {
  if (lo > hi) return 0.0;
  const std::int64_t first = descend_from_lo ? lo : hi;
  const std::int64_t step = descend_from_lo ? 1 : -1;
  const double log_max = LogBinomTerm(k, first, p);
  if (log_max == -std::numeric_limits<double>::infinity()) return 0.0;
  double sum = 0.0;
  double comp = 0.0;  // Kahan compensation
  for (std::int64_t i = first; i >= lo && i <= hi; i += step) {
    const double term = std::exp(LogBinomTerm(k, i, p) - log_max);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (term < 1e-22) break;  // remaining tail is negligible
  }
  return std::exp(log_max) * sum;
}

}  // namespace internal

// P[Binomial(k, p) >= c], by direct summation of log-space pmf terms.
// Whichever of the two tails holds less mass is summed directly and the
// other reported as its complement, which keeps the absolute error small on
// both sides.
inline double BinomUpperTail(std::int64_t k, std::int64_t c, double p) {
  if (c < 0 || c > k || k < 0) {
    throw ConfigError("BinomUpperTail: need 0 <= c <= k");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("BinomUpperTail: p must lie in [0, 1]");
  }
  if (c <= 0) return 1.0;
  if (p == 0.0) return 0.0;  // c >= 1
  if (p == 1.0) return 1.0;  // all k trials succeed, k >= c
  const auto mode = static_cast<std::int64_t>(
      std::floor((static_cast<double>(k) + 1.0) * p));
  if (c > mode) {
    // Upper tail starts past the mode: terms decrease from i = c.
    return internal::SumBinomRange(k, c, k, p, /*descend_from_lo=*/true);
  }
  // Lower side [0, c-1] sits left of the mode: sum it (terms decrease
  // moving down from i = c-1) and complement.
  return 1.0 - internal::SumBinomRange(k, 0, c - 1, p,
                                       /*descend_from_lo=*/false);
}

// P[Binomial(k, p) <= c], same summation scheme.
inline double BinomLowerTail(std::int64_t k, std::int64_t c, double p) {
  if (c < 0 || c > k || k < 0) {
    throw ConfigError("BinomLowerTail: need 0 <= c <= k");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("BinomLowerTail: p must lie in [0, 1]");
  }
  if (c >= k) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;  // c < k
  const auto mode = static_cast<std::int64_t>(
      std::floor((static_cast<double>(k) + 1.0) * p));
  if (c < mode) {
    return internal::SumBinomRange(k, 0, c, p, /*descend_from_lo=*/false);
  }
  return 1.0 - internal::SumBinomRange(k, c + 1, k, p,
                                       /*descend_from_lo=*/true);
}

// Per-guess success ceiling of an eps-DP mechanism against arity-K canary
// sets: e^eps / (e^eps + K - 1). Equals 1/K at eps = 0 and the sigmoid
// e^eps / (e^eps + 1) at K = 2.
inline double SuccessProb(double eps, int arity) {
  const double e = std::exp(eps);
  return e / (e + static_cast<double>(arity - 1));
}

namespace internal {

inline double OutcomeTail(const AuditOutcome& o, double eps) {
  return BinomUpperTail(o.guesses, o.correct, SuccessProb(eps, o.arity));
}

}  // namespace internal

// Largest eps (to absolute tolerance 1e-4) such that observing `correct`
// successes out of `guesses` would still have probability >= alpha under
// the binomial dominance tail of an eps-DP mechanism. With confidence
// 1 - alpha the audited mechanism is not eps-DP for any eps below the
// returned value. Returns 0 when the tally is consistent with chance.
inline EpsLowerBound EpsFromOutcome(const AuditOutcome& outcome,
                                    BoundMethod method = BoundMethod::kOr) {
  outcome.Validate();
  EpsLowerBound bound;
  bound.outcome = outcome;
  bound.method = method;
  if (outcome.guesses == 0 || outcome.correct == 0) return bound;

  constexpr double kEpsCap = 50.0;  // SuccessProb saturates in double here
  constexpr double kTol = 1e-4;
  const double alpha = outcome.alpha;
  if (internal::OutcomeTail(outcome, 0.0) >= alpha) return bound;

  // The tail is strictly increasing in eps (c >= 1), so bracket by doubling
  // and bisect.
  double lo = 0.0;
  double hi = 1.0;
  while (internal::OutcomeTail(outcome, hi) < alpha && hi < kEpsCap) {
    lo = hi;
    hi = std::min(2.0 * hi, kEpsCap);
  }
  if (internal::OutcomeTail(outcome, hi) < alpha) {
    bound.eps = kEpsCap;
    return bound;
  }
  while (hi - lo > kTol) {
    const double mid = 0.5 * (lo + hi);
    if (internal::OutcomeTail(outcome, mid) < alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  bound.eps = 0.5 * (lo + hi);
  return bound;
}

// Max over the two procedures, reported per run alongside the individual
// bounds. Requires one bound from each game.
inline double EpsMax(const EpsLowerBound& e_or, const EpsLowerBound& e_fdp) {
  if (e_or.method == e_fdp.method) {
    throw ConfigError("EpsMax: bounds must come from distinct procedures");
  }
  return std::max(e_or.eps, e_fdp.eps);
}

}  // namespace dpaudit

#endif  // DPAUDIT_ESTIMATOR_HPP_
