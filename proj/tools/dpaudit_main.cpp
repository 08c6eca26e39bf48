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

// CLI for the one-run auditing toolkit.
//
//   dpaudit run --config <path> [--trials N] [--seed S] [--out DIR]
//   dpaudit estimate --guesses K --correct C --arity A [--alpha 0.05]
//   dpaudit report --in DIR --format csv|json|table
//   dpaudit sweep --config <path> --game binary|kary [--in DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "dpaudit/dpaudit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

nlohmann::json LoadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dpaudit::ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

int CmdRun(const std::string& config_path, int trials_override,
           std::int64_t seed_override, const std::string& out_override) {
  dpaudit::ExperimentConfig cfg =
      dpaudit::ConfigFromJson(LoadJsonFile(config_path));
  if (trials_override > 0) cfg.trials = trials_override;
  if (seed_override >= 0) {
    cfg.base_seed = static_cast<std::uint64_t>(seed_override);
  }
  if (!out_override.empty()) cfg.out_dir = out_override;
  cfg.Validate();

  const dpaudit::AuditResult result = dpaudit::RunExperiment(cfg);
  const std::string dir = cfg.OutDir();
  dpaudit::WriteRunDir(result, dir);
  std::cout << dpaudit::ReportTable(result);
  std::cout << "\nrun directory: " << dir << "\n";
  return kExitOk;
}

int CmdEstimate(std::int64_t guesses, std::int64_t correct, int arity,
                double alpha) {
  dpaudit::AuditOutcome outcome;
  outcome.guesses = guesses;
  outcome.correct = correct;
  outcome.arity = arity;
  outcome.alpha = alpha;
  const dpaudit::EpsLowerBound bound = dpaudit::EpsFromOutcome(outcome);
  std::cout << "eps_lb = " << bound.eps << "  (guesses=" << guesses
            << ", correct=" << correct << ", arity=" << arity
            << ", alpha=" << alpha << ")\n";
  std::cout << "with confidence " << 1.0 - alpha
            << " the mechanism is not eps-DP for any eps below this value "
               "(delta = 0 bound)\n";
  return kExitOk;
}

int CmdReport(const std::string& dir, const std::string& format) {
  const dpaudit::AuditResult result = dpaudit::LoadRunDir(dir);
  if (format == "table") {
    std::cout << dpaudit::ReportTable(result);
  } else if (format == "csv") {
    std::cout << dpaudit::SummaryCsv(result);
  } else if (format == "json") {
    std::cout << dpaudit::ResultToJson(result).dump(2) << "\n";
  } else {
    throw dpaudit::ConfigError("unknown report format: " + format);
  }
  return kExitOk;
}

int CmdSweep(const std::string& config_path, const std::string& game,
             const std::string& in_override) {
  const dpaudit::ExperimentConfig cfg =
      dpaudit::ConfigFromJson(LoadJsonFile(config_path));
  const std::string dir = in_override.empty() ? cfg.OutDir() : in_override;
  const dpaudit::AuditResult result = dpaudit::LoadRunDir(dir);

  const bool binary = game == "binary";
  if (!binary && game != "kary") {
    throw dpaudit::ConfigError("--game must be binary or kary");
  }
  if ((binary && !cfg.games.binary) || (!binary && !cfg.games.kary)) {
    throw dpaudit::ConfigError("requested game not present in the run");
  }

  std::cout << "sweep rerun from persisted scores: " << dir << " ("
            << game << " game, step " << cfg.sweep.step << ")\n";
  for (const auto& trial : result.trials) {
    for (const auto& mr : trial.methods) {
      dpaudit::SweepResult sweep;
      if (binary) {
        const auto grid = dpaudit::MakeSweepGrid(cfg.data.m, cfg.sweep.step);
        sweep = dpaudit::SweepBinary(trial.s, mr.scores, grid, cfg.alpha);
      } else {
        const auto grid = dpaudit::MakeSweepGrid(
            cfg.data.m / cfg.games.arity, cfg.sweep.step);
        sweep = dpaudit::SweepKary(trial.u, mr.scores, cfg.games.arity, grid,
                                   cfg.alpha);
      }
      std::cout << "trial " << trial.trial << " method "
                << dpaudit::ScoreMethodName(mr.method) << ": best eps "
                << sweep.best.eps << " at budget "
                << sweep.best.outcome.guesses << " (correct "
                << sweep.best.outcome.correct << ")\n";
      for (const auto& pt : sweep.curve) {
        std::cout << "  budget " << pt.budget << ": k=" << pt.guesses
                  << " c=" << pt.correct << " eps=" << pt.eps << "\n";
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-run differential-privacy auditing toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  int trials_override = 0;
  std::int64_t seed_override = -1;
  std::string out_override;
  auto* run = app.add_subcommand("run", "run an audit experiment");
  run->add_option("--config", config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--trials", trials_override, "override trial count");
  run->add_option("--seed", seed_override, "override base seed");
  run->add_option("--out", out_override, "override output directory");

  std::int64_t guesses = 0;
  std::int64_t correct = 0;
  int arity = 2;
  double alpha = 0.05;
  auto* estimate =
      app.add_subcommand("estimate", "tally -> eps lower bound");
  estimate->add_option("--guesses", guesses, "number of guesses made")
      ->required();
  estimate->add_option("--correct", correct, "number of correct guesses")
      ->required();
  estimate->add_option("--arity", arity, "canary set size K (default 2)");
  estimate->add_option("--alpha", alpha, "significance level");

  std::string report_dir;
  std::string format = "table";
  auto* report = app.add_subcommand("report", "re-emit a run's results");
  report->add_option("--in", report_dir, "run directory")->required();
  report->add_option("--format", format, "csv|json|table");

  std::string sweep_config;
  std::string sweep_game;
  std::string sweep_in;
  auto* sweep = app.add_subcommand(
      "sweep", "re-run the budget sweep from persisted scores");
  sweep->add_option("--config", sweep_config, "experiment config (JSON)")
      ->required();
  sweep->add_option("--game", sweep_game, "binary|kary")->required();
  sweep->add_option("--in", sweep_in, "run directory (default: config out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      return CmdRun(config_path, trials_override, seed_override, out_override);
    }
    if (estimate->parsed()) {
      return CmdEstimate(guesses, correct, arity, alpha);
    }
    if (report->parsed()) return CmdReport(report_dir, format);
    if (sweep->parsed()) return CmdSweep(sweep_config, sweep_game, sweep_in);
  } catch (const dpaudit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dpaudit::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
