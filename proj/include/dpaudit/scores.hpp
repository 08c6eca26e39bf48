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

#ifndef DPAUDIT_SCORES_HPP_
#define DPAUDIT_SCORES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpaudit/common.hpp"
#include "dpaudit/normal.hpp"
#include "dpaudit/prng.hpp"
#include "dpaudit/smallnet.hpp"

namespace dpaudit {

// Scoring functions over a released model. All scores share one
// orientation: larger value means "more likely a training member".

enum class BaseScore { kMargin, kLoss };

inline const char* BaseScoreName(BaseScore s) {
  return s == BaseScore::kMargin ? "margin" : "loss";
}

inline BaseScore BaseScoreFromName(const std::string& name) {
  if (name == "margin") return BaseScore::kMargin;
  if (name == "loss") return BaseScore::kLoss;
  throw ConfigError("unknown base score: " + name);
}

// True-label logit minus the sum of the remaining logits.
inline double ScoreMargin(const NetConfig& cfg, const NetParams& model,
                          std::span<const double> x, int label) {
  return MarginScore(Forward(cfg, model, x), label);
}

// Negative cross-entropy loss (negated so that higher means member).
inline double ScoreLoss(const NetConfig& cfg, const NetParams& model,
                        std::span<const double> x, int label) {
  return -CrossEntropyLoss(Forward(cfg, model, x), label);
}

inline double EvalBaseScore(BaseScore which, const NetConfig& cfg,
                            const NetParams& model, std::span<const double> x,
                            int label) {
  return which == BaseScore::kMargin ? ScoreMargin(cfg, model, x, label)
                                     : ScoreLoss(cfg, model, x, label);
}

// P(S < s) for S ~ N(mu, sigma^2): the standard normal CDF of the
// standardized score. Invariant under joint affine rescaling of
// (s, mu, sigma).
inline double QuantileScore(double s, double mu, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::domain_error("QuantileScore: sigma must be positive");
  }
  return NormalCdf((s - mu) / sigma);
}

struct RegressorTrainConfig {
  std::vector<int> hidden = {16};
  Activation activation = Activation::kTanh;
  int epochs = 200;
  double lr = 0.05;
  int batch_size = 0;  // 0 = full batch
  // Step gradients above this L2 norm are rescaled to it (0 disables).
  // Gaussian NLL steps blow up when sigma shrinks ahead of the mean fit.
  double max_grad_norm = 5.0;

  void Validate() const {
    if (epochs < 1) throw ConfigError("RegressorTrainConfig: epochs >= 1");
    if (!(lr >= 0.0)) throw ConfigError("RegressorTrainConfig: lr >= 0");
    if (batch_size < 0) {
      throw ConfigError("RegressorTrainConfig: batch_size >= 0");
    }
    if (max_grad_norm < 0.0) {
      throw ConfigError("RegressorTrainConfig: max_grad_norm >= 0");
    }
  }
};

// Gaussian-likelihood regressor: maps an example's features to the (mu,
// sigma) of its score distribution under the released model. Scores are
// standardized internally during training; shift/scale restore raw units,
// so sigma > 0 is structural (scale * exp(log sigma)).
struct TrainedRegressor {
  NetConfig net;
  NetParams params;
  double shift = 0.0;
  double scale = 1.0;
  BaseScore base = BaseScore::kMargin;
  // Mean NLL on the (standardized) holdout scores, entry 0 before
  // training, then one entry per epoch. The returned params are the best
  // epoch's, so the final value never exceeds the initial one.
  std::vector<double> nll_trace;
  mutable std::int64_t sigma_clamps = 0;

  struct MuSigma {
    double mu = 0.0;
    double sigma = 1.0;
  };

  MuSigma Predict(std::span<const double> x) const {
    const auto out = Forward(net, params, x);
    return {shift + scale * out[0], scale * std::exp(out[1])};
  }

  double FinalNll() const {
    return nll_trace.empty() ? 0.0 : nll_trace.back();
  }
};

namespace internal {

inline double MeanRegressorNll(const NetConfig& net, const NetParams& params,
                               std::span<const Example> batch) {
  double total = 0.0;
  for (const Example& ex : batch) {
    const auto out = Forward(net, params, ex.x);
    const double d = ex.target - out[0];
    total += 0.5 * d * d * std::exp(-2.0 * out[1]) + out[1];
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace internal

// Fits the regressor on holdout examples scored against the released
// model. Mini-batch SGD on the Gaussian NLL (full batch when batch_size is
// 0); the best epoch's parameters are returned. The caller guarantees the
// holdout is disjoint from the canaries and the training set.
inline TrainedRegressor TrainRegressor(std::span<const Example> holdout,
                                       const NetConfig& target_cfg,
                                       const NetParams& target_model,
                                       BaseScore base,
                                       const RegressorTrainConfig& rcfg,
                                       Rng& rng) {
  rcfg.Validate();
  if (holdout.empty()) {
    throw ConfigError("TrainRegressor: holdout must be nonempty");
  }

  std::vector<double> scores(holdout.size());
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    scores[i] = EvalBaseScore(base, target_cfg, target_model, holdout[i].x,
                              holdout[i].label);
  }
  double shift = 0.0;
  for (double s : scores) shift += s;
  shift /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - shift) * (s - shift);
  double scale = std::sqrt(var / static_cast<double>(scores.size()));
  if (!(scale > 1e-12)) scale = 1.0;

  std::vector<Example> train(holdout.begin(), holdout.end());
  for (std::size_t i = 0; i < train.size(); ++i) {
    train[i].target = (scores[i] - shift) / scale;
  }

  TrainedRegressor reg;
  reg.net.input_dim = static_cast<int>(holdout[0].x.size());
  reg.net.hidden_dims = rcfg.hidden;
  reg.net.output_dim = 2;
  reg.net.activation = rcfg.activation;
  reg.net.head = Head::kGaussian;
  reg.net.Validate();
  reg.shift = shift;
  reg.scale = scale;
  reg.base = base;
  reg.params = InitParams(reg.net, rng);
  // Zero head: the first prediction is the standardized score mean with
  // unit sigma, so training starts from the best constant fit (NLL 0.5)
  // and can only improve on it.
  auto& head = reg.params.weights.back();
  std::fill(head.data.begin(), head.data.end(), 0.0);
  std::fill(reg.params.biases.back().begin(), reg.params.biases.back().end(),
            0.0);

  double best_nll = internal::MeanRegressorNll(reg.net, reg.params, train);
  if (!std::isfinite(best_nll)) {
    throw TrainingError("TrainRegressor: non-finite NLL at initialization");
  }
  reg.nll_trace.push_back(best_nll);
  NetParams best_params = reg.params;

  std::vector<std::size_t> index(train.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
  const std::size_t batch =
      rcfg.batch_size == 0 ? train.size()
                           : static_cast<std::size_t>(rcfg.batch_size);

  for (int epoch = 0; epoch < rcfg.epochs; ++epoch) {
    if (rcfg.batch_size != 0) {
      for (std::size_t i = index.size(); i > 1; --i) {
        std::swap(index[i - 1], index[rng.Below(i)]);
      }
    }
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t stop = std::min(start + batch, train.size());
      std::vector<Example> chunk;
      chunk.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        chunk.push_back(train[index[i]]);
      }
      const BackwardResult back =
          Backward(reg.net, reg.params, chunk, Loss::kGaussianNll);
      NetParams grad = SumGrads(back.per_example);
      grad.Scale(1.0 / static_cast<double>(chunk.size()));
      if (rcfg.max_grad_norm > 0.0) {
        const double norm = grad.L2Norm();
        if (norm > rcfg.max_grad_norm) {
          grad.Scale(rcfg.max_grad_norm / norm);
        }
      }
      if (rcfg.lr > 0.0) {
        reg.params = SgdStep(std::move(reg.params), grad, rcfg.lr);
      }
    }
    const double nll = internal::MeanRegressorNll(reg.net, reg.params, train);
    if (!std::isfinite(nll)) {
      throw TrainingError("TrainRegressor: NLL diverged at epoch " +
                          std::to_string(epoch));
    }
    reg.nll_trace.push_back(nll);
    if (nll < best_nll) {
      best_nll = nll;
      best_params = reg.params;
    }
  }
  reg.params = std::move(best_params);
  reg.nll_trace.push_back(best_nll);
  return reg;
}

// The rescored membership score q = P(S < s(x)) under the regressor's
// per-example (mu, sigma). Lies in (0, 1); higher means member. Sigmas
// below 1e-6 are clamped and counted on the regressor.
inline double Rescore(const TrainedRegressor& reg, const NetConfig& target_cfg,
                      const NetParams& target_model, std::span<const double> x,
                      int label) {
  const double s =
      EvalBaseScore(reg.base, target_cfg, target_model, x, label);
  auto pred = reg.Predict(x);
  if (pred.sigma < 1e-6) {
    pred.sigma = 1e-6;
    ++reg.sigma_clamps;
  }
  return QuantileScore(s, pred.mu, pred.sigma);
}

// -------- serialization (versioned JSON container) --------

inline nlohmann::json NetConfigToJson(const NetConfig& cfg) {
  return nlohmann::json{
      {"input_dim", cfg.input_dim},
      {"hidden_dims", cfg.hidden_dims},
      {"output_dim", cfg.output_dim},
      {"activation", cfg.activation == Activation::kRelu ? "relu" : "tanh"},
      {"head", cfg.head == Head::kLogits ? "logits" : "gaussian"}};
}

inline NetConfig NetConfigFromJson(const nlohmann::json& j) {
  NetConfig cfg;
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  cfg.output_dim = j.at("output_dim").get<int>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "relu") {
    cfg.activation = Activation::kRelu;
  } else if (act == "tanh") {
    cfg.activation = Activation::kTanh;
  } else {
    throw ConfigError("unknown activation: " + act);
  }
  const std::string head = j.at("head").get<std::string>();
  if (head == "logits") {
    cfg.head = Head::kLogits;
  } else if (head == "gaussian") {
    cfg.head = Head::kGaussian;
  } else {
    throw ConfigError("unknown head: " + head);
  }
  cfg.Validate();
  return cfg;
}

inline constexpr const char* kRegressorFormat = "dpaudit-regressor";
inline constexpr int kRegressorVersion = 1;

inline nlohmann::json RegressorToJson(const TrainedRegressor& reg) {
  return nlohmann::json{{"format", kRegressorFormat},
                        {"version", kRegressorVersion},
                        {"net", NetConfigToJson(reg.net)},
                        {"params", Flatten(reg.params)},
                        {"shift", reg.shift},
                        {"scale", reg.scale},
                        {"base", BaseScoreName(reg.base)},
                        {"nll_trace", reg.nll_trace}};
}

inline TrainedRegressor RegressorFromJson(const nlohmann::json& j) {
  if (j.value("format", "") != kRegressorFormat) {
    throw ConfigError("regressor container: bad format tag");
  }
  if (j.value("version", -1) != kRegressorVersion) {
    throw ConfigError("regressor container: unsupported version");
  }
  TrainedRegressor reg;
  reg.net = NetConfigFromJson(j.at("net"));
  reg.params = ZerosLike(reg.net);
  const auto flat = j.at("params").get<std::vector<double>>();
  Unflatten(flat, reg.params);
  reg.shift = j.at("shift").get<double>();
  reg.scale = j.at("scale").get<double>();
  reg.base = BaseScoreFromName(j.at("base").get<std::string>());
  reg.nll_trace = j.at("nll_trace").get<std::vector<double>>();
  return reg;
}

inline void SaveRegressor(const TrainedRegressor& reg,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << RegressorToJson(reg).dump(2) << "\n";
}

inline TrainedRegressor LoadRegressor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  in >> j;
  return RegressorFromJson(j);
}

}  // namespace dpaudit

#endif  // DPAUDIT_SCORES_HPP_
