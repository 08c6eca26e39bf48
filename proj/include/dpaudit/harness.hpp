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

#ifndef DPAUDIT_HARNESS_HPP_
#define DPAUDIT_HARNESS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpaudit/common.hpp"
#include "dpaudit/estimator.hpp"
#include "dpaudit/game.hpp"
#include "dpaudit/mechanisms.hpp"
#include "dpaudit/prng.hpp"
#include "dpaudit/scores.hpp"
#include "dpaudit/smallnet.hpp"
#include "dpaudit/sweep.hpp"

namespace dpaudit {

// Experiment orchestration: configuration, seeding, multi-trial runs and
// paired baseline-vs-quantile comparisons. Within a trial every scoring
// method consumes the identical mechanism release (verified by hash), and
// the whole run is a pure function of the config including its base seed.

enum class MechanismKind { kRr, kGaussian, kDpSgd };
enum class ScoreMethod { kRelease, kMargin, kLoss, kQuantile };

inline const char* MechanismName(MechanismKind k) {
  switch (k) {
    case MechanismKind::kRr:
      return "rr";
    case MechanismKind::kGaussian:
      return "gaussian";
    case MechanismKind::kDpSgd:
      return "dpsgd";
  }
  return "?";
}

inline const char* ScoreMethodName(ScoreMethod m) {
  switch (m) {
    case ScoreMethod::kRelease:
      return "release";
    case ScoreMethod::kMargin:
      return "margin";
    case ScoreMethod::kLoss:
      return "loss";
    case ScoreMethod::kQuantile:
      return "quantile";
  }
  return "?";
}

inline ScoreMethod ScoreMethodFromName(const std::string& name) {
  if (name == "release") return ScoreMethod::kRelease;
  if (name == "margin") return ScoreMethod::kMargin;
  if (name == "loss") return ScoreMethod::kLoss;
  if (name == "quantile") return ScoreMethod::kQuantile;
  throw ConfigError("unknown score method: " + name);
}

struct DataSpec {
  int n = 0;  // training set size
  int m = 0;  // canaries
  int r = 0;  // non-auditing examples
  int dim = 8;
  int classes = 4;
  double heterogeneity = 0.0;
  double separation = 4.0;
};

struct GameSpec {
  bool binary = true;
  bool kary = true;
  int arity = 2;  // K for the reconstruction game
};

struct MechanismSpec {
  MechanismKind kind = MechanismKind::kRr;
  double eps_true = 1.0;      // rr
  double noise_sigma = 1.0;   // gaussian
  // dpsgd
  double clip = 1.0;
  double noise_multiplier = 1.0;
  int steps = 100;
  int batch_size = 32;
  double lr = 0.1;
  std::vector<int> hidden = {16};
  Activation activation = Activation::kRelu;
};

struct QuantileSpec {
  RegressorTrainConfig regressor;
  int holdout = 0;  // 0 = default 2 * m
  BaseScore base = BaseScore::kMargin;
};

struct SweepSpec {
  int step = 10;
};

struct ExperimentConfig {
  std::string name = "experiment";
  MechanismSpec mechanism;
  DataSpec data;
  GameSpec games;
  std::vector<ScoreMethod> methods;
  QuantileSpec quantile;
  int trials = 1;
  std::uint64_t base_seed = 1;
  double alpha = 0.05;
  SweepSpec sweep;
  std::string out_dir;  // default runs/<name>

  bool NeedsQuantile() const {
    for (auto m : methods) {
      if (m == ScoreMethod::kQuantile) return true;
    }
    return false;
  }

  int HoldoutSize() const {
    if (!NeedsQuantile()) return 0;
    return quantile.holdout > 0 ? quantile.holdout : 2 * data.m;
  }

  std::string OutDir() const {
    return out_dir.empty() ? "runs/" + name : out_dir;
  }

  void Validate() const {
    if (trials < 1) throw ConfigError("config: trials must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw ConfigError("config: alpha must lie in (0, 1)");
    }
    if (sweep.step < 1) throw ConfigError("config: sweep step must be >= 1");
    if (data.m < 2) throw ConfigError("config: need at least 2 canaries");
    if (data.r < 0) throw ConfigError("config: r must be >= 0");
    if (data.dim < 1 || data.classes < 2) {
      throw ConfigError("config: need dim >= 1 and classes >= 2");
    }
    if (!games.binary && !games.kary) {
      throw ConfigError("config: at least one game must be enabled");
    }
    if (games.kary) {
      if (games.arity < 2) throw ConfigError("config: arity must be >= 2");
      if (data.m % games.arity != 0) {
        throw ConfigError("config: m must be a multiple of the arity");
      }
      if (data.n != data.r + data.m / games.arity) {
        throw ConfigError("config: K-ary game requires n = r + m/K");
      }
    }
    if (games.binary) {
      if (data.m % 2 != 0) {
        throw ConfigError("config: binary game requires even m");
      }
      if (data.n != data.r + data.m / 2) {
        throw ConfigError("config: binary game requires n = r + m/2");
      }
    }
    // Both games share one release, which needs one consistent selection;
    // that exists exactly when K = 2.
    if (games.binary && games.kary && games.arity != 2) {
      throw ConfigError("config: running both games requires arity 2");
    }
    if (methods.empty()) {
      throw ConfigError("config: at least one score method required");
    }
    const bool analytic = mechanism.kind != MechanismKind::kDpSgd;
    for (auto m : methods) {
      if (analytic && m != ScoreMethod::kRelease) {
        throw ConfigError(
            "config: rr/gaussian mechanisms score by their release only");
      }
      if (!analytic && m == ScoreMethod::kRelease) {
        throw ConfigError("config: 'release' scoring needs rr or gaussian");
      }
    }
    if (analytic && games.kary && games.arity != 2) {
      throw ConfigError("config: rr/gaussian release scores are per-bit; "
                        "K-ary auditing needs arity 2");
    }
    if (mechanism.kind == MechanismKind::kRr && mechanism.eps_true < 0.0) {
      throw ConfigError("config: eps_true must be >= 0");
    }
    if (mechanism.kind == MechanismKind::kGaussian &&
        !(mechanism.noise_sigma > 0.0)) {
      throw ConfigError("config: noise_sigma must be positive");
    }
    if (NeedsQuantile()) {
      quantile.regressor.Validate();
      if (quantile.holdout < 0) {
        throw ConfigError("config: holdout size must be >= 0");
      }
    }
  }
};

// -------- config file (JSON; schema documented in README and the shipped
// configs/example-full.json) --------

inline ExperimentConfig ConfigFromJson(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.name = j.value("name", std::string("experiment"));

  const auto& mech = j.at("mechanism");
  const std::string kind = mech.at("type").get<std::string>();
  if (kind == "rr") {
    cfg.mechanism.kind = MechanismKind::kRr;
    cfg.mechanism.eps_true = mech.at("eps_true").get<double>();
  } else if (kind == "gaussian") {
    cfg.mechanism.kind = MechanismKind::kGaussian;
    cfg.mechanism.noise_sigma = mech.at("noise_sigma").get<double>();
  } else if (kind == "dpsgd") {
    cfg.mechanism.kind = MechanismKind::kDpSgd;
    cfg.mechanism.clip = mech.value("clip", 1.0);
    cfg.mechanism.noise_multiplier = mech.value("noise_multiplier", 1.0);
    cfg.mechanism.steps = mech.value("steps", 100);
    cfg.mechanism.batch_size = mech.value("batch_size", 32);
    cfg.mechanism.lr = mech.value("lr", 0.1);
    cfg.mechanism.hidden = mech.value("hidden", std::vector<int>{16});
    const std::string act = mech.value("activation", std::string("relu"));
    if (act == "relu") {
      cfg.mechanism.activation = Activation::kRelu;
    } else if (act == "tanh") {
      cfg.mechanism.activation = Activation::kTanh;
    } else {
      throw ConfigError("unknown activation: " + act);
    }
  } else {
    throw ConfigError("unknown mechanism type: " + kind);
  }

  const auto& data = j.at("data");
  cfg.data.n = data.at("n").get<int>();
  cfg.data.m = data.at("m").get<int>();
  cfg.data.r = data.at("r").get<int>();
  cfg.data.dim = data.value("dim", 8);
  cfg.data.classes = data.value("classes", 4);
  cfg.data.heterogeneity = data.value("heterogeneity", 0.0);
  cfg.data.separation = data.value("separation", 4.0);

  if (j.contains("games")) {
    const auto& games = j.at("games");
    cfg.games.binary = games.value("binary", true);
    cfg.games.kary = games.value("kary", true);
    cfg.games.arity = games.value("arity", 2);
  }

  if (j.contains("scores")) {
    for (const auto& name : j.at("scores")) {
      cfg.methods.push_back(ScoreMethodFromName(name.get<std::string>()));
    }
  } else if (cfg.mechanism.kind == MechanismKind::kDpSgd) {
    cfg.methods = {ScoreMethod::kMargin};
  } else {
    cfg.methods = {ScoreMethod::kRelease};
  }

  if (j.contains("quantile")) {
    const auto& q = j.at("quantile");
    cfg.quantile.regressor.hidden = q.value("hidden", std::vector<int>{16});
    const std::string act = q.value("activation", std::string("tanh"));
    cfg.quantile.regressor.activation =
        act == "relu" ? Activation::kRelu : Activation::kTanh;
    cfg.quantile.regressor.epochs = q.value("epochs", 200);
    cfg.quantile.regressor.lr = q.value("lr", 0.05);
    cfg.quantile.regressor.batch_size = q.value("batch_size", 0);
    cfg.quantile.holdout = q.value("holdout", 0);
    cfg.quantile.base =
        BaseScoreFromName(q.value("base", std::string("margin")));
  }

  cfg.trials = j.value("trials", 1);
  cfg.base_seed = j.value("base_seed", std::uint64_t{1});
  cfg.alpha = j.value("alpha", 0.05);
  if (j.contains("sweep")) cfg.sweep.step = j.at("sweep").value("step", 10);
  cfg.out_dir = j.value("out", std::string());
  cfg.Validate();
  return cfg;
}

inline nlohmann::json ConfigToJson(const ExperimentConfig& cfg) {
  nlohmann::json mech;
  mech["type"] = MechanismName(cfg.mechanism.kind);
  switch (cfg.mechanism.kind) {
    case MechanismKind::kRr:
      mech["eps_true"] = cfg.mechanism.eps_true;
      break;
    case MechanismKind::kGaussian:
      mech["noise_sigma"] = cfg.mechanism.noise_sigma;
      break;
    case MechanismKind::kDpSgd:
      mech["clip"] = cfg.mechanism.clip;
      mech["noise_multiplier"] = cfg.mechanism.noise_multiplier;
      mech["steps"] = cfg.mechanism.steps;
      mech["batch_size"] = cfg.mechanism.batch_size;
      mech["lr"] = cfg.mechanism.lr;
      mech["hidden"] = cfg.mechanism.hidden;
      mech["activation"] =
          cfg.mechanism.activation == Activation::kRelu ? "relu" : "tanh";
      break;
  }
  nlohmann::json scores = nlohmann::json::array();
  for (auto m : cfg.methods) scores.push_back(ScoreMethodName(m));
  nlohmann::json out{
      {"name", cfg.name},
      {"mechanism", mech},
      {"data",
       {{"n", cfg.data.n},
        {"m", cfg.data.m},
        {"r", cfg.data.r},
        {"dim", cfg.data.dim},
        {"classes", cfg.data.classes},
        {"heterogeneity", cfg.data.heterogeneity},
        {"separation", cfg.data.separation}}},
      {"games",
       {{"binary", cfg.games.binary},
        {"kary", cfg.games.kary},
        {"arity", cfg.games.arity}}},
      {"scores", scores},
      {"trials", cfg.trials},
      {"base_seed", cfg.base_seed},
      {"alpha", cfg.alpha},
      {"sweep", {{"step", cfg.sweep.step}}}};
  if (cfg.NeedsQuantile()) {
    out["quantile"] = {
        {"hidden", cfg.quantile.regressor.hidden},
        {"activation",
         cfg.quantile.regressor.activation == Activation::kRelu ? "relu"
                                                                : "tanh"},
        {"epochs", cfg.quantile.regressor.epochs},
        {"lr", cfg.quantile.regressor.lr},
        {"batch_size", cfg.quantile.regressor.batch_size},
        {"holdout", cfg.quantile.holdout},
        {"base", BaseScoreName(cfg.quantile.base)}};
  }
  if (!cfg.out_dir.empty()) out["out"] = cfg.out_dir;
  return out;
}

// -------- releases and trial results --------

// Black-box release of one mechanism run. Exactly one of the payloads is
// populated; the hash pins it so every scoring pass can assert it consumes
// the identical release.
struct Release {
  MechanismKind kind = MechanismKind::kRr;
  std::vector<std::int8_t> bits;   // rr
  std::vector<double> reals;       // gaussian
  NetParams model;                 // dpsgd final iterate
  std::uint64_t hash = 0;

  std::uint64_t ComputeHash() const {
    std::uint64_t h = Fnv1a64(&kind, sizeof(kind));
    if (!bits.empty()) h = Fnv1a64(bits.data(), bits.size(), h);
    if (!reals.empty()) {
      h = Fnv1a64(reals.data(), reals.size() * sizeof(double), h);
    }
    for (const auto& w : model.weights) {
      h = Fnv1a64(w.data.data(), w.data.size() * sizeof(double), h);
    }
    for (const auto& b : model.biases) {
      h = Fnv1a64(b.data(), b.size() * sizeof(double), h);
    }
    return h;
  }

  void Seal() { hash = ComputeHash(); }

  // Audit-log assertion: the release being scored is the one the
  // mechanism produced.
  void Verify() const {
    if (hash != ComputeHash()) {
      throw std::logic_error("Release::Verify: release was modified after "
                             "the mechanism sealed it");
    }
  }
};

struct MethodResult {
  ScoreMethod method = ScoreMethod::kMargin;
  std::vector<double> scores;  // per canary, higher means member
  bool has_or = false;
  bool has_fdp = false;
  SweepResult or_sweep;
  SweepResult fdp_sweep;
  double eps_or = 0.0;
  double eps_fdp = 0.0;
  double eps_max = 0.0;
  std::vector<double> regressor_nll_trace;  // quantile only
  std::int64_t sigma_clamps = 0;            // quantile only
  nlohmann::json regressor_snapshot;        // quantile only
};

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  std::uint64_t release_hash = 0;
  std::vector<std::int8_t> s;  // binary selection (when binary game ran)
  std::vector<int> u;          // K-ary selection (when K-ary game ran)
  std::vector<MethodResult> methods;
};

struct AuditResult {
  ExperimentConfig config;
  std::vector<TrialResult> trials;
};

struct AggregateRow {
  ScoreMethod method;
  bool has_or = false;
  bool has_fdp = false;
  bool has_max = false;
  double mean_or = 0.0;
  double mean_fdp = 0.0;
  double mean_max = 0.0;  // mean over per-trial maxima
};

// Aggregates are the arithmetic means of the per-trial values; eps_max is
// averaged over per-trial maxima, never the max of means.
inline std::vector<AggregateRow> Aggregate(const AuditResult& result) {
  std::vector<AggregateRow> rows;
  if (result.trials.empty()) return rows;
  const auto& methods = result.trials[0].methods;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    AggregateRow row;
    row.method = methods[mi].method;
    row.has_or = methods[mi].has_or;
    row.has_fdp = methods[mi].has_fdp;
    row.has_max = methods[mi].has_or && methods[mi].has_fdp;
    for (const auto& trial : result.trials) {
      const auto& mr = trial.methods.at(mi);
      row.mean_or += mr.eps_or;
      row.mean_fdp += mr.eps_fdp;
      row.mean_max += mr.eps_max;
    }
    const auto n = static_cast<double>(result.trials.size());
    row.mean_or /= n;
    row.mean_fdp /= n;
    row.mean_max /= n;
    rows.push_back(row);
  }
  return rows;
}

// -------- the runner --------

namespace internal {

inline std::vector<Example> SliceExamples(const SyntheticDataset& ds, int lo,
                                          int hi) {
  std::vector<Example> out;
  out.reserve(hi - lo);
  for (int i = lo; i < hi; ++i) out.push_back(ds.examples[i].ToTrainExample());
  return out;
}

}  // namespace internal

inline TrialResult RunTrial(const ExperimentConfig& cfg, int trial_index) {
  const std::uint64_t trial_seed = SplitSeed(cfg.base_seed, trial_index);
  Rng data_rng(SplitSeed(trial_seed, Stream::kData));
  Rng partition_rng(SplitSeed(trial_seed, Stream::kPartition));
  Rng mechanism_rng(SplitSeed(trial_seed, Stream::kMechanism));
  Rng regressor_rng(SplitSeed(trial_seed, Stream::kRegressor));

  TrialResult trial;
  trial.trial = trial_index;
  trial.seed = trial_seed;

  const int m = cfg.data.m;
  const int r = cfg.data.r;
  const int holdout = cfg.HoldoutSize();

  SyntheticDataset ds =
      MakeSynthetic(m + r + holdout, cfg.data.dim, cfg.data.classes,
                    cfg.data.heterogeneity, data_rng, cfg.data.separation);
  AssignAuditRoles(ds, m, r);

  // Selection. When both games run, the K = 2 set layout provides the one
  // selection both can consume (each pair contributes exactly one IN
  // canary, so it is also a valid binary selection).
  BinaryGameState binary_state;
  KaryGameState kary_state;
  if (cfg.games.kary) {
    kary_state = MakeKaryState(m, cfg.games.arity, partition_rng);
    trial.u = kary_state.selected;
    if (cfg.games.binary) {
      binary_state = DeriveBinaryFromKary(kary_state);
      binary_state.r = r;
      binary_state.n = r + m / 2;
      binary_state.Validate();
      trial.s = binary_state.s;
    }
  } else {
    PartitionResult part = PartitionBinary(m, r, partition_rng);
    binary_state = part.state;
    trial.s = binary_state.s;
  }

  // Membership bits for the analytic mechanisms: needed whenever the
  // release itself is the score source.
  std::vector<std::int8_t> member_bits;
  if (cfg.games.binary) {
    member_bits = binary_state.s;
  } else if (cfg.games.kary && cfg.games.arity == 2) {
    member_bits = DeriveBinaryFromKary(kary_state).s;
  }

  // Training set: selected canaries plus all non-auditing examples.
  std::vector<Example> train;
  train.reserve(cfg.data.n);
  if (cfg.games.kary) {
    for (int i = 0; i < kary_state.num_sets; ++i) {
      const int canary =
          kary_state.canary_index[i * cfg.games.arity + kary_state.selected[i]];
      train.push_back(ds.examples[canary].ToTrainExample());
    }
  } else {
    for (int i = 0; i < m; ++i) {
      if (binary_state.s[i] == 1) {
        train.push_back(ds.examples[i].ToTrainExample());
      }
    }
  }
  for (int i = 0; i < r; ++i) {
    train.push_back(ds.examples[m + i].ToTrainExample());
  }

  // Run the mechanism; only the sealed release crosses into scoring.
  Release release;
  release.kind = cfg.mechanism.kind;
  switch (cfg.mechanism.kind) {
    case MechanismKind::kRr:
      release.bits = RrRelease(member_bits, cfg.mechanism.eps_true,
                               mechanism_rng);
      break;
    case MechanismKind::kGaussian:
      release.reals = GaussianRelease(member_bits, cfg.mechanism.noise_sigma,
                                      mechanism_rng);
      break;
    case MechanismKind::kDpSgd: {
      DpSgdConfig dpsgd;
      dpsgd.clip = cfg.mechanism.clip;
      dpsgd.noise_multiplier = cfg.mechanism.noise_multiplier;
      dpsgd.steps = cfg.mechanism.steps;
      dpsgd.batch_size = cfg.mechanism.batch_size;
      dpsgd.lr = cfg.mechanism.lr;
      dpsgd.net.input_dim = cfg.data.dim;
      dpsgd.net.hidden_dims = cfg.mechanism.hidden;
      dpsgd.net.output_dim = cfg.data.classes;
      dpsgd.net.activation = cfg.mechanism.activation;
      dpsgd.net.head = Head::kLogits;
      release.model = DpSgdTrain(train, dpsgd, mechanism_rng);
      break;
    }
  }
  release.Seal();
  trial.release_hash = release.hash;

  NetConfig target_cfg;
  if (cfg.mechanism.kind == MechanismKind::kDpSgd) {
    target_cfg.input_dim = cfg.data.dim;
    target_cfg.hidden_dims = cfg.mechanism.hidden;
    target_cfg.output_dim = cfg.data.classes;
    target_cfg.activation = cfg.mechanism.activation;
    target_cfg.head = Head::kLogits;
  }

  const std::vector<int> binary_grid =
      cfg.games.binary ? MakeSweepGrid(m, cfg.sweep.step) : std::vector<int>{};
  const std::vector<int> kary_grid =
      cfg.games.kary ? MakeSweepGrid(m / cfg.games.arity, cfg.sweep.step)
                     : std::vector<int>{};

  for (ScoreMethod method : cfg.methods) {
    release.Verify();  // every method scores the one sealed release
    MethodResult mr;
    mr.method = method;
    mr.scores.resize(m);
    switch (method) {
      case ScoreMethod::kRelease:
        for (int i = 0; i < m; ++i) {
          mr.scores[i] = release.bits.empty()
                             ? release.reals[i]
                             : static_cast<double>(release.bits[i]);
        }
        break;
      case ScoreMethod::kMargin:
        for (int i = 0; i < m; ++i) {
          mr.scores[i] = ScoreMargin(target_cfg, release.model,
                                     ds.examples[i].x, ds.examples[i].label);
        }
        break;
      case ScoreMethod::kLoss:
        for (int i = 0; i < m; ++i) {
          mr.scores[i] = ScoreLoss(target_cfg, release.model,
                                   ds.examples[i].x, ds.examples[i].label);
        }
        break;
      case ScoreMethod::kQuantile: {
        const std::vector<Example> holdout_examples =
            internal::SliceExamples(ds, m + r, m + r + holdout);
        const TrainedRegressor reg =
            TrainRegressor(holdout_examples, target_cfg, release.model,
                           cfg.quantile.base, cfg.quantile.regressor,
                           regressor_rng);
        for (int i = 0; i < m; ++i) {
          mr.scores[i] = Rescore(reg, target_cfg, release.model,
                                 ds.examples[i].x, ds.examples[i].label);
        }
        mr.regressor_nll_trace = reg.nll_trace;
        mr.sigma_clamps = reg.sigma_clamps;
        mr.regressor_snapshot = RegressorToJson(reg);
        break;
      }
    }

    if (cfg.games.binary) {
      mr.or_sweep = SweepBinary(binary_state.s, mr.scores, binary_grid,
                                cfg.alpha);
      mr.eps_or = mr.or_sweep.best.eps;
      mr.has_or = true;
    }
    if (cfg.games.kary) {
      mr.fdp_sweep = SweepKary(kary_state.selected, mr.scores,
                               cfg.games.arity, kary_grid, cfg.alpha);
      mr.eps_fdp = mr.fdp_sweep.best.eps;
      mr.has_fdp = true;
    }
    if (mr.has_or && mr.has_fdp) {
      mr.eps_max = EpsMax(mr.or_sweep.best, mr.fdp_sweep.best);
    } else {
      mr.eps_max = mr.has_or ? mr.eps_or : mr.eps_fdp;
    }
    trial.methods.push_back(std::move(mr));
  }
  return trial;
}

inline AuditResult RunExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();
  AuditResult result;
  result.config = cfg;
  result.trials.reserve(cfg.trials);
  for (int t = 0; t < cfg.trials; ++t) {
    result.trials.push_back(RunTrial(cfg, t));
  }
  return result;
}

}  // namespace dpaudit

#endif  // DPAUDIT_HARNESS_HPP_
