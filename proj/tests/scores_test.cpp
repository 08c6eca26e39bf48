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

#include "dpaudit/scores.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "dpaudit/mechanisms.hpp"
#include "dpaudit/normal.hpp"
#include "dpaudit/prng.hpp"

namespace dpaudit {
namespace {

TEST(NormalCdf, ExactCenterAndSymmetry) {
  EXPECT_EQ(NormalCdf(0.0), 0.5);
  for (double t : {0.1, 0.3, 0.7, 1.0, 1.5, 2.5, 4.0, 6.0}) {
    EXPECT_NEAR(NormalCdf(-t) + NormalCdf(t), 1.0, 1e-12) << t;
  }
}

// High-precision oracle: the C library's erf agrees with the in-repo
// rational approximation far below the documented 1e-7 budget.
TEST(NormalCdf, MatchesLibmErf) {
  for (double x = -8.0; x <= 8.0; x += 0.0625) {
    EXPECT_NEAR(Erf(x), std::erf(x), 1e-12) << x;
    EXPECT_NEAR(Erfc(x), std::erfc(x), 1e-12) << x;
    const double phi = 0.5 * std::erfc(-x / std::sqrt(2.0));
    EXPECT_NEAR(NormalCdf(x), phi, 1e-12) << x;
  }
}

TEST(QuantileScore, MedianSigmaPointAndMonotonicity) {
  EXPECT_DOUBLE_EQ(QuantileScore(1.7, 1.7, 0.4), 0.5);
  // Phi(1) from a high-precision normal-CDF table.
  EXPECT_NEAR(QuantileScore(2.0, 1.0, 1.0), 0.841345, 1e-5);
  double prev = 0.0;
  for (double s = -3.0; s <= 3.0; s += 0.25) {
    const double q = QuantileScore(s, 0.0, 1.0);
    EXPECT_GT(q, prev);
    EXPECT_GT(q, 0.0);
    EXPECT_LT(q, 1.0);
    prev = q;
  }
  EXPECT_THROW(QuantileScore(0.0, 0.0, 0.0), std::domain_error);
}

TEST(QuantileScore, AffineInvariant) {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const double s = 3.0 * rng.Gaussian();
    const double mu = 3.0 * rng.Gaussian();
    const double sigma = 0.1 + 2.0 * rng.Uniform();
    const double a = 0.1 + 4.0 * rng.Uniform();
    const double b = 5.0 * rng.Gaussian();
    const double q1 = QuantileScore(s, mu, sigma);
    const double q2 = QuantileScore(a * s + b, a * mu + b, a * sigma);
    EXPECT_NEAR(q1, q2, 1e-12);
  }
}

NetConfig ClassifierNet(int dim, int classes) {
  NetConfig cfg;
  cfg.input_dim = dim;
  cfg.hidden_dims = {};
  cfg.output_dim = classes;
  cfg.head = Head::kLogits;
  return cfg;
}

TEST(ScoreLoss, UniformLogitsGiveMinusLogC) {
  const int classes = 4;
  const NetConfig cfg = ClassifierNet(3, classes);
  const NetParams zero = ZerosLike(cfg);  // all logits equal
  const std::vector<double> x = {0.3, -0.8, 1.1};
  for (int label = 0; label < classes; ++label) {
    EXPECT_NEAR(ScoreLoss(cfg, zero, x, label), -std::log(classes), 1e-12);
  }
}

TEST(ScoreLoss, DominantLogitApproachesZeroFromBelow) {
  const NetConfig cfg = ClassifierNet(1, 3);
  NetParams p = ZerosLike(cfg);
  p.biases[0][1] = 30.0;  // label-1 logit dominates
  const std::vector<double> x = {0.0};
  const double score = ScoreLoss(cfg, p, x, 1);
  EXPECT_LT(score, 0.0);
  EXPECT_GT(score, -1e-9);
}

// Independent scalar softmax/log recomputation on random inputs.
TEST(ScoreLoss, MatchesScalarSoftmaxOracle) {
  const NetConfig cfg = ClassifierNet(2, 3);
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const NetParams p = InitParams(cfg, rng);
    const std::vector<double> x = {rng.Gaussian(), rng.Gaussian()};
    const int label = static_cast<int>(rng.Below(3));
    const auto logits = Forward(cfg, p, x);
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v);
    const double expected = std::log(std::exp(logits[label]) / denom);
    EXPECT_NEAR(ScoreLoss(cfg, p, x, label), expected, 1e-12);
  }
}

TEST(ScoreMargin, MatchesMarginOfForward) {
  const NetConfig cfg = ClassifierNet(2, 3);
  Rng rng(7);
  const NetParams p = InitParams(cfg, rng);
  const std::vector<double> x = {0.5, -0.5};
  const auto logits = Forward(cfg, p, x);
  EXPECT_DOUBLE_EQ(ScoreMargin(cfg, p, x, 1), MarginScore(logits, 1));
}

std::vector<Example> RandomHoldout(int count, int dim, int classes,
                                   std::uint64_t seed) {
  Rng rng(seed);
  auto ds = MakeSynthetic(count, dim, classes, 0.0, rng);
  std::vector<Example> out;
  for (const auto& ex : ds.examples) out.push_back(ex.ToTrainExample());
  return out;
}

RegressorTrainConfig QuickRegressor(int epochs, double lr) {
  RegressorTrainConfig rcfg;
  rcfg.hidden = {8};
  rcfg.epochs = epochs;
  rcfg.lr = lr;
  rcfg.batch_size = 0;
  return rcfg;
}

// All-zero target model scores every example identically, so the fitted
// mean must land on that constant.
TEST(TrainRegressor, FitsConstantScores) {
  const NetConfig target_cfg = ClassifierNet(3, 4);
  const NetParams target = ZerosLike(target_cfg);  // margin = 0 everywhere
  const auto holdout = RandomHoldout(200, 3, 4, 11);

  Rng rng(13);
  const auto reg = TrainRegressor(holdout, target_cfg, target,
                                  BaseScore::kMargin, QuickRegressor(400, 0.05),
                                  rng);
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(reg.Predict(holdout[i].x).mu, 0.0, 0.05);
  }
  EXPECT_LE(reg.nll_trace.back(), reg.nll_trace.front());
}

TEST(TrainRegressor, NonzeroConstantScores) {
  const NetConfig target_cfg = ClassifierNet(3, 4);
  NetParams target = ZerosLike(target_cfg);
  for (int c = 0; c < 4; ++c) target.biases[0][c] = 1.0;
  // All logits equal 1.0: margin = 1 - 3 = -2 for every label.
  const auto holdout = RandomHoldout(200, 3, 4, 17);
  Rng rng(19);
  const auto reg = TrainRegressor(holdout, target_cfg, target,
                                  BaseScore::kMargin, QuickRegressor(400, 0.05),
                                  rng);
  for (int i = 0; i < 20; ++i) {
    EXPECT_NEAR(reg.Predict(holdout[i].x).mu, -2.0, 0.05);
  }
}

TEST(TrainRegressor, ZeroRateLeavesInitialParams) {
  const NetConfig target_cfg = ClassifierNet(2, 2);
  Rng model_rng(23);
  const NetParams target = InitParams(target_cfg, model_rng);
  const auto holdout = RandomHoldout(50, 2, 2, 29);

  Rng a(31), b(31);
  const auto reg = TrainRegressor(holdout, target_cfg, target,
                                  BaseScore::kMargin, QuickRegressor(1, 0.0),
                                  a);
  // Same stream, same init (with the zeroed head); lr 0 must not move
  // anything.
  NetConfig net = reg.net;
  NetParams init = InitParams(net, b);
  std::fill(init.weights.back().data.begin(), init.weights.back().data.end(),
            0.0);
  std::fill(init.biases.back().begin(), init.biases.back().end(), 0.0);
  const auto va = Flatten(reg.params);
  const auto vb = Flatten(init);
  ASSERT_EQ(va.size(), vb.size());
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_EQ(va[i], vb[i]);
}

TEST(TrainRegressor, DeterministicGivenSeed) {
  const NetConfig target_cfg = ClassifierNet(2, 2);
  Rng model_rng(37);
  const NetParams target = InitParams(target_cfg, model_rng);
  const auto holdout = RandomHoldout(80, 2, 2, 41);
  Rng a(43), b(43);
  RegressorTrainConfig rcfg = QuickRegressor(30, 0.05);
  rcfg.batch_size = 16;  // exercises the shuffled mini-batch path
  const auto r1 = TrainRegressor(holdout, target_cfg, target,
                                 BaseScore::kMargin, rcfg, a);
  const auto r2 = TrainRegressor(holdout, target_cfg, target,
                                 BaseScore::kMargin, rcfg, b);
  const auto v1 = Flatten(r1.params);
  const auto v2 = Flatten(r2.params);
  for (std::size_t i = 0; i < v1.size(); ++i) EXPECT_EQ(v1[i], v2[i]);
  EXPECT_EQ(r1.nll_trace, r2.nll_trace);
}

// On homogeneous data the standardized best-constant fit has NLL exactly
// 0.5, so the trained regressor must end within 0.1 nat of it.
TEST(TrainRegressor, WithinTenthNatOfConstantFit) {
  const NetConfig target_cfg = ClassifierNet(4, 3);
  Rng model_rng(47);
  const NetParams target = InitParams(target_cfg, model_rng);
  const auto holdout = RandomHoldout(300, 4, 3, 53);
  Rng rng(59);
  const auto reg = TrainRegressor(holdout, target_cfg, target,
                                  BaseScore::kMargin,
                                  QuickRegressor(100, 0.02), rng);
  EXPECT_LE(reg.FinalNll(), 0.5 + 0.1);
}

TrainedRegressor ConstantRegressor(int dim, double mu, double sigma) {
  TrainedRegressor reg;
  reg.net.input_dim = dim;
  reg.net.hidden_dims = {};
  reg.net.output_dim = 2;
  reg.net.head = Head::kGaussian;
  reg.params = ZerosLike(reg.net);
  reg.params.biases[0][0] = mu;
  reg.params.biases[0][1] = std::log(sigma);
  reg.base = BaseScore::kMargin;
  reg.nll_trace = {0.0};
  return reg;
}

// A constant-(mu, sigma) regressor reproduces the base-score ranking
// exactly, ties included.
TEST(Rescore, DegenerateRegressorPreservesRanking) {
  const int classes = 3;
  const NetConfig target_cfg = ClassifierNet(2, classes);
  Rng model_rng(61);
  const NetParams target = InitParams(target_cfg, model_rng);

  auto holdout = RandomHoldout(40, 2, classes, 67);
  holdout.push_back(holdout[0]);  // deliberate duplicate: a tie
  const auto reg = ConstantRegressor(2, 0.4, 1.7);

  std::vector<double> base(holdout.size());
  std::vector<double> rescored(holdout.size());
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    base[i] = ScoreMargin(target_cfg, target, holdout[i].x,
                          holdout[i].label);
    rescored[i] = Rescore(reg, target_cfg, target, holdout[i].x,
                          holdout[i].label);
  }
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    for (std::size_t j = 0; j < holdout.size(); ++j) {
      EXPECT_EQ(base[i] < base[j], rescored[i] < rescored[j]);
      EXPECT_EQ(base[i] == base[j], rescored[i] == rescored[j]);
    }
  }
}

TEST(Rescore, ClampsTinySigmaAndCounts) {
  const NetConfig target_cfg = ClassifierNet(2, 2);
  const NetParams target = ZerosLike(target_cfg);
  auto reg = ConstantRegressor(2, 0.0, 1e-12);  // far below the floor
  const std::vector<double> x = {0.1, 0.2};
  EXPECT_EQ(reg.sigma_clamps, 0);
  const double q = Rescore(reg, target_cfg, target, x, 0);
  EXPECT_EQ(reg.sigma_clamps, 1);
  EXPECT_GT(q, 0.0);
  EXPECT_LT(q, 1.0);
}

TEST(RegressorSerialization, RoundTripsExactly) {
  const NetConfig target_cfg = ClassifierNet(2, 2);
  Rng model_rng(71);
  const NetParams target = InitParams(target_cfg, model_rng);
  const auto holdout = RandomHoldout(60, 2, 2, 73);
  Rng rng(79);
  const auto reg = TrainRegressor(holdout, target_cfg, target,
                                  BaseScore::kMargin, QuickRegressor(20, 0.05),
                                  rng);

  const auto dir = std::filesystem::temp_directory_path() / "dpaudit_scores";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "regressor.json").string();
  SaveRegressor(reg, path);
  const auto loaded = LoadRegressor(path);

  EXPECT_EQ(loaded.shift, reg.shift);
  EXPECT_EQ(loaded.scale, reg.scale);
  EXPECT_EQ(loaded.base, reg.base);
  EXPECT_EQ(loaded.nll_trace, reg.nll_trace);
  for (const auto& ex : holdout) {
    const auto a = reg.Predict(ex.x);
    const auto b = loaded.Predict(ex.x);
    EXPECT_EQ(a.mu, b.mu);
    EXPECT_EQ(a.sigma, b.sigma);
  }
}

TEST(RegressorSerialization, RejectsWrongContainer) {
  nlohmann::json j{{"format", "something-else"}, {"version", 1}};
  EXPECT_THROW(RegressorFromJson(j), ConfigError);
  nlohmann::json v{{"format", kRegressorFormat}, {"version", 99}};
  EXPECT_THROW(RegressorFromJson(v), ConfigError);
}

}  // namespace
}  // namespace dpaudit
