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

#ifndef DPAUDIT_MECHANISMS_HPP_
#define DPAUDIT_MECHANISMS_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dpaudit/common.hpp"
#include "dpaudit/normal.hpp"
#include "dpaudit/prng.hpp"
#include "dpaudit/smallnet.hpp"

namespace dpaudit {

// Mechanisms under audit. Each exposes only its final released output;
// nothing observed mid-run crosses the module boundary.

struct DataExample {
  std::vector<double> x;
  int label = 0;
  // Per-example hardness knob: scales the example's distance to its class
  // mean by (1 + heterogeneity * difficulty).
  double difficulty = 0.0;

  Example ToTrainExample() const { return Example{x, label, 0.0}; }
};

// A synthetic audit pool: the first `num_canaries` examples are canaries,
// the next `num_nonaudit` always train, and anything beyond is available
// as holdout.
struct SyntheticDataset {
  std::vector<DataExample> examples;
  int dim = 0;
  int num_classes = 0;
  int num_canaries = 0;  // m
  int num_nonaudit = 0;  // r
  std::vector<std::uint8_t> is_canary;

  void Validate() const {
    if (num_canaries + num_nonaudit > static_cast<int>(examples.size())) {
      throw ConfigError("SyntheticDataset: canary/non-audit counts exceed pool");
    }
    if (is_canary.size() != examples.size()) {
      throw ConfigError("SyntheticDataset: canary flags out of sync");
    }
    int flagged = 0;
    for (auto f : is_canary) flagged += f ? 1 : 0;
    if (flagged != num_canaries) {
      throw ConfigError("SyntheticDataset: expected exactly " +
                        std::to_string(num_canaries) + " canary flags");
    }
  }

  int HoldoutSize() const {
    return static_cast<int>(examples.size()) - num_canaries - num_nonaudit;
  }
};

// Class-conditional Gaussian blobs with per-example difficulty. Class means
// sit `separation` away from the origin (equispaced on a circle in the
// first two feature dimensions; on a line when dim == 1), so larger
// separation makes the classes linearly separable.
inline SyntheticDataset MakeSynthetic(int n_total, int dim, int num_classes,
                                      double heterogeneity, Rng& rng,
                                      double separation = 4.0) {
  if (n_total < 4) throw ConfigError("MakeSynthetic: need n_total >= 4");
  if (dim < 1) throw ConfigError("MakeSynthetic: need dim >= 1");
  if (num_classes < 2) throw ConfigError("MakeSynthetic: need >= 2 classes");
  if (heterogeneity < 0.0 || heterogeneity > 1.0) {
    throw ConfigError("MakeSynthetic: heterogeneity must lie in [0, 1]");
  }

  std::vector<std::vector<double>> means(num_classes,
                                         std::vector<double>(dim, 0.0));
  for (int c = 0; c < num_classes; ++c) {
    if (dim == 1) {
      means[c][0] = separation * (c - 0.5 * (num_classes - 1));
    } else {
      const double angle = 2.0 * 3.141592653589793 * c / num_classes;
      means[c][0] = separation * std::cos(angle);
      means[c][1] = separation * std::sin(angle);
    }
  }

  SyntheticDataset ds;
  ds.dim = dim;
  ds.num_classes = num_classes;
  ds.examples.reserve(n_total);
  for (int i = 0; i < n_total; ++i) {
    DataExample ex;
    ex.label = i % num_classes;
    ex.difficulty = rng.Uniform();
    const double scale = 1.0 + heterogeneity * ex.difficulty;
    ex.x.resize(dim);
    for (int j = 0; j < dim; ++j) {
      ex.x[j] = means[ex.label][j] + scale * rng.Gaussian();
    }
    ds.examples.push_back(std::move(ex));
  }
  ds.is_canary.assign(n_total, 0);
  return ds;
}

// Marks the audit layout: first m examples are canaries, next r always
// train; the remainder is the holdout pool.
inline void AssignAuditRoles(SyntheticDataset& ds, int m, int r) {
  if (m < 0 || r < 0 || m + r > static_cast<int>(ds.examples.size())) {
    throw ConfigError("AssignAuditRoles: m + r exceeds the pool");
  }
  ds.num_canaries = m;
  ds.num_nonaudit = r;
  ds.is_canary.assign(ds.examples.size(), 0);
  for (int i = 0; i < m; ++i) ds.is_canary[i] = 1;
  ds.Validate();
}

// Randomized response over membership bits: each bit is preserved with
// probability e^eps / (e^eps + 1) and flipped otherwise, independently.
// Exactly eps-DP per bit, which makes it the toolkit's ground-truth oracle.
// The released vector doubles as the score vector (score of canary i = bit
// i, oriented higher-means-member).
inline std::vector<std::int8_t> RrRelease(const std::vector<std::int8_t>& s,
                                          double eps_true, Rng& rng) {
  if (eps_true < 0.0) throw ConfigError("RrRelease: eps_true must be >= 0");
  const double keep = std::exp(eps_true) / (std::exp(eps_true) + 1.0);
  std::vector<std::int8_t> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = rng.Bernoulli(keep) ? s[i] : static_cast<std::int8_t>(-s[i]);
  }
  return out;
}

// Adds N(0, noise_sigma^2) to each membership bit. Sensitivity between the
// S_i = +1 and S_i = -1 alternatives is 2.
inline std::vector<double> GaussianRelease(const std::vector<std::int8_t>& s,
                                           double noise_sigma, Rng& rng) {
  if (!(noise_sigma > 0.0)) {
    throw ConfigError("GaussianRelease: noise_sigma must be positive");
  }
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    out[i] = static_cast<double>(s[i]) + noise_sigma * rng.Gaussian();
  }
  return out;
}

// Analytic (eps, delta) curve of the sensitivity-`sensitivity` Gaussian
// mechanism, recorded in reports for gap context only (the estimator never
// consumes it).
inline double GaussianTradeoffDelta(double eps, double noise_sigma,
                                    double sensitivity = 2.0) {
  if (!(noise_sigma > 0.0) || !(sensitivity > 0.0)) {
    throw ConfigError("GaussianTradeoffDelta: sigma and sensitivity > 0");
  }
  const double a = sensitivity / (2.0 * noise_sigma);
  const double b = eps * noise_sigma / sensitivity;
  return NormalCdf(a - b) - std::exp(eps) * NormalCdf(-a - b);
}

struct DpSgdConfig {
  double clip = 1.0;  // +infinity disables clipping
  double noise_multiplier = 1.0;
  int steps = 1;
  int batch_size = 1;
  double lr = 0.1;
  NetConfig net;

  void Validate() const {
    if (!(clip > 0.0)) throw ConfigError("DpSgdConfig: clip must be positive");
    if (noise_multiplier < 0.0) {
      throw ConfigError("DpSgdConfig: noise_multiplier must be >= 0");
    }
    if (noise_multiplier > 0.0 && !std::isfinite(clip)) {
      throw ConfigError("DpSgdConfig: noise with unbounded clip is undefined");
    }
    if (steps < 1) throw ConfigError("DpSgdConfig: steps must be >= 1");
    if (batch_size < 1) throw ConfigError("DpSgdConfig: batch_size >= 1");
    if (!(lr > 0.0)) throw ConfigError("DpSgdConfig: lr must be positive");
    net.Validate();
  }
};

// Poisson subsampling: each index in [0, n) enters the batch independently
// with probability `rate`.
inline std::vector<int> PoissonSample(int n, double rate, Rng& rng) {
  std::vector<int> batch;
  for (int i = 0; i < n; ++i) {
    if (rng.Bernoulli(rate)) batch.push_back(i);
  }
  return batch;
}

// DP-SGD on the training slice: per step, Poisson-sample a batch, take
// per-example gradients, clip at C, sum, add N(0, (C * noise_multiplier)^2)
// per coordinate, average over the nominal batch size, and step. Only the
// final iterate is returned. When noise_multiplier == 0 no noise draws are
// consumed, so the run reduces to (clipped) SGD on the same stream.
inline NetParams DpSgdTrain(std::span<const Example> train,
                            const DpSgdConfig& cfg, Rng& rng) {
  cfg.Validate();
  if (train.empty()) throw ConfigError("DpSgdTrain: empty training set");
  const int n = static_cast<int>(train.size());
  const double rate =
      std::min(1.0, static_cast<double>(cfg.batch_size) / n);

  NetParams params = InitParams(cfg.net, rng);
  for (int step = 0; step < cfg.steps; ++step) {
    const std::vector<int> batch = PoissonSample(n, rate, rng);
    NetParams sum = ZerosLike(cfg.net);
    if (!batch.empty()) {
      std::vector<Example> chosen;
      chosen.reserve(batch.size());
      for (int idx : batch) chosen.push_back(train[idx]);
      BackwardResult back =
          Backward(cfg.net, params, chosen, Loss::kCrossEntropy);
      for (double loss : back.losses) {
        if (!std::isfinite(loss)) {
          throw TrainingError("DpSgdTrain: non-finite loss at step " +
                              std::to_string(step));
        }
      }
      if (std::isfinite(cfg.clip)) {
        back.per_example = ClipPerExample(std::move(back.per_example), cfg.clip);
      }
      sum = SumGrads(back.per_example);
    }
    if (cfg.noise_multiplier > 0.0) {
      const double stddev = cfg.clip * cfg.noise_multiplier;
      for (auto& w : sum.weights) {
        for (double& v : w.data) v += stddev * rng.Gaussian();
      }
      for (auto& b : sum.biases) {
        for (double& v : b) v += stddev * rng.Gaussian();
      }
    }
    sum.Scale(1.0 / cfg.batch_size);
    params = SgdStep(std::move(params), sum, cfg.lr);
    if (!params.AllFinite()) {
      throw TrainingError("DpSgdTrain: non-finite parameters at step " +
                          std::to_string(step));
    }
  }
  return params;
}

}  // namespace dpaudit

#endif  // DPAUDIT_MECHANISMS_HPP_
