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

#ifndef DPAUDIT_SMALLNET_HPP_
#define DPAUDIT_SMALLNET_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dpaudit/common.hpp"
#include "dpaudit/prng.hpp"

namespace dpaudit {

// Minimal fully-connected network with manual backprop and per-example
// gradients, in double precision throughout. Shared by the DP-SGD target
// mechanism and the Gaussian-likelihood regressor.

enum class Activation { kRelu, kTanh };
enum class Head {
  kLogits,    // classifier: output_dim logits
  kGaussian,  // (mu, log sigma): output_dim must be 2
};
enum class Loss { kCrossEntropy, kGaussianNll };

struct NetConfig {
  int input_dim = 1;
  std::vector<int> hidden_dims;
  int output_dim = 1;
  Activation activation = Activation::kRelu;
  Head head = Head::kLogits;

  void Validate() const {
    if (input_dim < 1 || output_dim < 1) {
      throw ConfigError("NetConfig: dims must be >= 1");
    }
    for (int h : hidden_dims) {
      if (h < 1) throw ConfigError("NetConfig: hidden dims must be >= 1");
    }
    if (head == Head::kGaussian && output_dim != 2) {
      throw ConfigError("NetConfig: gaussian head requires output_dim == 2");
    }
  }

  // [input_dim, hidden..., output_dim]
  std::vector<int> LayerDims() const {
    std::vector<int> dims;
    dims.reserve(hidden_dims.size() + 2);
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(output_dim);
    return dims;
  }
};

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c) {}
  double& At(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double At(int r, int c) const {
    return data[static_cast<size_t>(r) * cols + c];
  }
};

// Per-layer weights and biases. weights[l] maps activations of layer l
// (cols) to pre-activations of layer l+1 (rows).
struct NetParams {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  std::size_t Count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.data.size();
    for (const auto& b : biases) n += b.size();
    return n;
  }

  bool SameShape(const NetParams& o) const {
    if (weights.size() != o.weights.size()) return false;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows != o.weights[l].rows ||
          weights[l].cols != o.weights[l].cols ||
          biases[l].size() != o.biases[l].size()) {
        return false;
      }
    }
    return true;
  }

  bool AllFinite() const {
    for (const auto& w : weights) {
      for (double v : w.data) {
        if (!std::isfinite(v)) return false;
      }
    }
    for (const auto& b : biases) {
      for (double v : b) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

  double L2Norm() const {
    double sq = 0.0;
    for (const auto& w : weights) {
      for (double v : w.data) sq += v * v;
    }
    for (const auto& b : biases) {
      for (double v : b) sq += v * v;
    }
    return std::sqrt(sq);
  }

  void Scale(double a) {
    for (auto& w : weights) {
      for (double& v : w.data) v *= a;
    }
    for (auto& b : biases) {
      for (double& v : b) v *= a;
    }
  }

  // this += a * other. Shapes must match.
  void Axpy(double a, const NetParams& other) {
    if (!SameShape(other)) throw ConfigError("Axpy: shape mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (std::size_t i = 0; i < weights[l].data.size(); ++i) {
        weights[l].data[i] += a * other.weights[l].data[i];
      }
      for (std::size_t i = 0; i < biases[l].size(); ++i) {
        biases[l][i] += a * other.biases[l][i];
      }
    }
  }
};

inline NetParams ZerosLike(const NetConfig& cfg) {
  cfg.Validate();
  const auto dims = cfg.LayerDims();
  NetParams p;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    p.weights.emplace_back(dims[l + 1], dims[l]);
    p.biases.emplace_back(dims[l + 1], 0.0);
  }
  return p;
}

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases, drawn
// from the given stream.
inline NetParams InitParams(const NetConfig& cfg, Rng& rng) {
  NetParams p = ZerosLike(cfg);
  for (auto& w : p.weights) {
    const double bound = std::sqrt(6.0 / (w.cols + w.rows));
    for (double& v : w.data) v = (2.0 * rng.Uniform() - 1.0) * bound;
  }
  return p;
}

// Flat parameter view, used by serialization and by finite-difference
// checks in tests. Order: per layer, weights row-major then biases.
inline std::vector<double> Flatten(const NetParams& p) {
  std::vector<double> out;
  out.reserve(p.Count());
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    out.insert(out.end(), p.weights[l].data.begin(), p.weights[l].data.end());
    out.insert(out.end(), p.biases[l].begin(), p.biases[l].end());
  }
  return out;
}

inline void Unflatten(std::span<const double> flat, NetParams& p) {
  if (flat.size() != p.Count()) throw ConfigError("Unflatten: size mismatch");
  std::size_t pos = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (double& v : p.weights[l].data) v = flat[pos++];
    for (double& v : p.biases[l]) v = flat[pos++];
  }
}

inline double ApplyActivation(Activation act, double z) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kTanh:
      return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the pre-activation z.
inline double ActivationGrad(Activation act, double z) {
  switch (act) {
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

// Deterministic forward pass. Output is the raw head vector: logits, or
// (mu, log sigma) for the gaussian head.
inline std::vector<double> Forward(const NetConfig& cfg, const NetParams& p,
                                   std::span<const double> x) {
  if (static_cast<int>(x.size()) != cfg.input_dim) {
    throw ConfigError("Forward: input has " + std::to_string(x.size()) +
                      " entries, expected " + std::to_string(cfg.input_dim));
  }
  if (p.weights.size() != cfg.hidden_dims.size() + 1) {
    throw ConfigError("Forward: params do not match config");
  }
  std::vector<double> act(x.begin(), x.end());
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Matrix& w = p.weights[l];
    if (w.cols != static_cast<int>(act.size())) {
      throw ConfigError("Forward: layer shape mismatch");
    }
    std::vector<double> next(w.rows);
    for (int i = 0; i < w.rows; ++i) {
      double z = p.biases[l][i];
      for (int j = 0; j < w.cols; ++j) z += w.At(i, j) * act[j];
      next[i] = (l + 1 < p.weights.size()) ? ApplyActivation(cfg.activation, z)
                                           : z;
    }
    act = std::move(next);
  }
  return act;
}

inline int PredictClass(const NetConfig& cfg, const NetParams& p,
                        std::span<const double> x) {
  const auto logits = Forward(cfg, p, x);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                          logits.begin());
}

// logits[label] minus the sum of all other logits. Oriented so that larger
// values mean the model is more confident in the true label.
inline double MarginScore(std::span<const double> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw InputError("MarginScore: label out of range");
  }
  double rest = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (static_cast<int>(j) != label) rest += logits[j];
  }
  return logits[label] - rest;
}

// (s - mu)^2 / (2 sigma^2) + log sigma.
inline double GaussianNll(double s, double mu, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::domain_error("GaussianNll: sigma must be positive");
  }
  const double d = s - mu;
  return d * d / (2.0 * sigma * sigma) + std::log(sigma);
}

// Numerically stable -log softmax(logits)[label].
inline double CrossEntropyLoss(std::span<const double> logits, int label) {
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw InputError("CrossEntropyLoss: label out of range");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return std::log(sum) - (logits[label] - mx);
}

// One training example. `label` feeds the cross-entropy loss; `target` is
// the regression scalar for the gaussian NLL loss.
struct Example {
  std::vector<double> x;
  int label = 0;
  double target = 0.0;
};

// One gradient per example, in NetParams shape, with the L2 norms cached.
struct PerExampleGrads {
  std::vector<NetParams> grads;
  std::vector<double> norms;
};

struct BackwardResult {
  PerExampleGrads per_example;
  std::vector<double> losses;
};

namespace internal {

struct ForwardCache {
  std::vector<std::vector<double>> activations;  // per layer, incl. input
  std::vector<std::vector<double>> preacts;      // per layer above input
};

inline ForwardCache ForwardWithCache(const NetConfig& cfg, const NetParams& p,
                                     std::span<const double> x) {
  ForwardCache cache;
  cache.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const Matrix& w = p.weights[l];
    std::vector<double> z(w.rows);
    for (int i = 0; i < w.rows; ++i) {
      double v = p.biases[l][i];
      for (int j = 0; j < w.cols; ++j) v += w.At(i, j) * cache.activations[l][j];
      z[i] = v;
    }
    cache.preacts.push_back(z);
    std::vector<double> a(w.rows);
    const bool last = (l + 1 == p.weights.size());
    for (int i = 0; i < w.rows; ++i) {
      a[i] = last ? z[i] : ApplyActivation(cfg.activation, z[i]);
    }
    cache.activations.push_back(std::move(a));
  }
  return cache;
}

}  // namespace internal

// Per-example gradients of the chosen loss. The loss must match the head:
// cross-entropy needs logits, gaussian NLL needs (mu, log sigma).
inline BackwardResult Backward(const NetConfig& cfg, const NetParams& p,
                               std::span<const Example> batch, Loss loss) {
  cfg.Validate();
  if (batch.empty()) throw ConfigError("Backward: batch must be nonempty");
  if (loss == Loss::kCrossEntropy && cfg.head != Head::kLogits) {
    throw ConfigError("Backward: cross-entropy requires the logits head");
  }
  if (loss == Loss::kGaussianNll && cfg.head != Head::kGaussian) {
    throw ConfigError("Backward: gaussian NLL requires the gaussian head");
  }

  BackwardResult result;
  result.per_example.grads.reserve(batch.size());
  result.per_example.norms.reserve(batch.size());
  result.losses.reserve(batch.size());

  const std::size_t num_layers = p.weights.size();
  for (const Example& ex : batch) {
    const auto cache = internal::ForwardWithCache(cfg, p, ex.x);
    const auto& out = cache.activations.back();

    // Gradient of the loss w.r.t. the head outputs.
    std::vector<double> delta(out.size());
    double loss_value = 0.0;
    if (loss == Loss::kCrossEntropy) {
      loss_value = CrossEntropyLoss(out, ex.label);
      const double mx = *std::max_element(out.begin(), out.end());
      double sum = 0.0;
      for (double v : out) sum += std::exp(v - mx);
      for (std::size_t i = 0; i < out.size(); ++i) {
        delta[i] = std::exp(out[i] - mx) / sum;
      }
      delta[ex.label] -= 1.0;
    } else {
      // The head emits (mu, log sigma); evaluating the NLL in the
      // log-sigma parameterization keeps sigma > 0 structural and lets a
      // diverging iterate surface as a non-finite loss downstream.
      const double mu = out[0];
      const double log_sigma = out[1];
      const double inv_var = std::exp(-2.0 * log_sigma);
      const double d = ex.target - mu;
      loss_value = 0.5 * d * d * inv_var + log_sigma;
      delta[0] = -d * inv_var;                  // d/d mu
      delta[1] = 1.0 - d * d * inv_var;         // d/d log sigma
    }
    result.losses.push_back(loss_value);

    NetParams g = ZerosLike(cfg);
    for (std::size_t l = num_layers; l-- > 0;) {
      const auto& a_prev = cache.activations[l];
      for (int i = 0; i < g.weights[l].rows; ++i) {
        g.biases[l][i] = delta[i];
        for (int j = 0; j < g.weights[l].cols; ++j) {
          g.weights[l].At(i, j) = delta[i] * a_prev[j];
        }
      }
      if (l > 0) {
        const Matrix& w = p.weights[l];
        std::vector<double> prev(w.cols, 0.0);
        for (int j = 0; j < w.cols; ++j) {
          double v = 0.0;
          for (int i = 0; i < w.rows; ++i) v += w.At(i, j) * delta[i];
          prev[j] = v * ActivationGrad(cfg.activation, cache.preacts[l - 1][j]);
        }
        delta = std::move(prev);
      }
    }
    result.per_example.norms.push_back(g.L2Norm());
    result.per_example.grads.push_back(std::move(g));
  }
  return result;
}

// Rescales each example's gradient by min(1, C / ||g||). Zero-norm
// gradients pass through unchanged; afterwards every norm is <= C.
inline PerExampleGrads ClipPerExample(PerExampleGrads grads, double clip) {
  if (!(clip > 0.0)) throw ConfigError("ClipPerExample: C must be positive");
  for (std::size_t i = 0; i < grads.grads.size(); ++i) {
    const double norm = grads.norms[i];
    if (norm > clip) {
      grads.grads[i].Scale(clip / norm);
      grads.norms[i] = clip;
    }
  }
  return grads;
}

inline NetParams SumGrads(const PerExampleGrads& grads) {
  if (grads.grads.empty()) throw ConfigError("SumGrads: empty gradient set");
  NetParams total = grads.grads[0];
  for (std::size_t i = 1; i < grads.grads.size(); ++i) {
    total.Axpy(1.0, grads.grads[i]);
  }
  return total;
}

// params - lr * grads, elementwise.
inline NetParams SgdStep(NetParams params, const NetParams& grads, double lr) {
  if (!(lr > 0.0)) throw ConfigError("SgdStep: lr must be positive");
  if (!params.SameShape(grads)) throw ConfigError("SgdStep: shape mismatch");
  params.Axpy(-lr, grads);
  return params;
}

}  // namespace dpaudit

#endif  // DPAUDIT_SMALLNET_HPP_
