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

#ifndef DPAUDIT_PRNG_HPP_
#define DPAUDIT_PRNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace dpaudit {

// splitmix64 finalizer (Vigna). Full-avalanche 64-bit mixer.
inline std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seed-split function: the seed of substream `index` under `base` is the
// splitmix64 output at offset index+1. Every derived stream in a run is
// obtained this way (trials from the base seed, then per-role substreams
// from the trial seed), so streams are reproducible and non-overlapping
// for practical purposes.
inline std::uint64_t SplitSeed(std::uint64_t base, std::uint64_t index) {
  return Mix64(base + (index + 1) * 0x9E3779B97F4A7C15ull);
}

// Substream roles used by the experiment harness.
enum class Stream : std::uint64_t {
  kData = 0,
  kPartition = 1,
  kMechanism = 2,
  kRegressor = 3,
};

inline std::uint64_t SplitSeed(std::uint64_t base, Stream role) {
  return SplitSeed(base, static_cast<std::uint64_t>(role));
}

// Seeded generator with uniform and Box-Muller Gaussian draws. Determinism
// is guaranteed within a build; cross-platform bit reproducibility is not a
// goal.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform double in [0, 1).
  double Uniform() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, n). n must be >= 1.
  std::uint64_t Below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = NextU64();
    while (v >= limit) v = NextU64();
    return v % n;
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached.
  double Gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - Uniform();  // (0, 1]
    const double u2 = Uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dpaudit

#endif  // DPAUDIT_PRNG_HPP_
