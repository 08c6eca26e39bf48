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

#ifndef DPAUDIT_REPORT_HPP_
#define DPAUDIT_REPORT_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpaudit/harness.hpp"
#include "dpaudit/mechanisms.hpp"

namespace dpaudit {

// Persistence and report emission. Every artifact is a pure function of
// the AuditResult, so re-running a config with the same base seed
// reproduces the files byte for byte.

inline constexpr const char* kResultFormat = "dpaudit-result";
inline constexpr int kResultVersion = 1;

// Caveats that accompany every report. The arity-K bound reuses the
// binomial dominance tail, so it is a same-game different-arity estimate
// rather than a reimplementation of the external f-DP machinery, and no
// delta correction is applied anywhere.
inline std::vector<std::string> ReportNotes() {
  return {
      "eps_or: binary membership game, binomial-dominance tail, delta = 0.",
      "eps_or_fdp: K-ary reconstruction game under the same dominance "
      "bound with success ceiling e^eps/(e^eps+K-1); not the external "
      "f-DP estimator.",
      "For mechanisms with delta > 0 the bound ignores delta; no "
      "conservative correction is claimed.",
      "eps_max is the per-trial max over the two games; aggregates average "
      "per-trial values at alpha = 0.05 per estimate (no multiple-"
      "comparisons correction across the budget grid or the game pair).",
  };
}

namespace internal {

inline std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline nlohmann::json SweepToJson(const SweepResult& sweep) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& pt : sweep.curve) {
    curve.push_back({{"budget", pt.budget},
                     {"guesses", pt.guesses},
                     {"correct", pt.correct},
                     {"eps", pt.eps}});
  }
  return nlohmann::json{
      {"best",
       {{"eps", sweep.best.eps},
        {"guesses", sweep.best.outcome.guesses},
        {"correct", sweep.best.outcome.correct},
        {"arity", sweep.best.outcome.arity},
        {"alpha", sweep.best.outcome.alpha},
        {"method", BoundMethodName(sweep.best.method)}}},
      {"curve", curve}};
}

inline SweepResult SweepFromJson(const nlohmann::json& j) {
  SweepResult sweep;
  const auto& best = j.at("best");
  sweep.best.eps = best.at("eps").get<double>();
  sweep.best.outcome.guesses = best.at("guesses").get<std::int64_t>();
  sweep.best.outcome.correct = best.at("correct").get<std::int64_t>();
  sweep.best.outcome.arity = best.at("arity").get<int>();
  sweep.best.outcome.alpha = best.at("alpha").get<double>();
  sweep.best.method = best.at("method").get<std::string>() == "or"
                          ? BoundMethod::kOr
                          : BoundMethod::kOrFdp;
  for (const auto& pt : j.at("curve")) {
    sweep.curve.push_back({pt.at("budget").get<int>(),
                           pt.at("guesses").get<std::int64_t>(),
                           pt.at("correct").get<std::int64_t>(),
                           pt.at("eps").get<double>()});
  }
  return sweep;
}

}  // namespace internal

inline nlohmann::json TrialToJson(const TrialResult& trial) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& mr : trial.methods) {
    nlohmann::json jm{{"method", ScoreMethodName(mr.method)},
                      {"scores", mr.scores},
                      {"eps_max", mr.eps_max}};
    if (mr.has_or) {
      jm["eps_or"] = mr.eps_or;
      jm["or_sweep"] = internal::SweepToJson(mr.or_sweep);
    }
    if (mr.has_fdp) {
      jm["eps_or_fdp"] = mr.eps_fdp;
      jm["fdp_sweep"] = internal::SweepToJson(mr.fdp_sweep);
    }
    if (mr.method == ScoreMethod::kQuantile) {
      jm["regressor_nll_trace"] = mr.regressor_nll_trace;
      jm["sigma_clamps"] = mr.sigma_clamps;
    }
    methods.push_back(std::move(jm));
  }
  nlohmann::json j{{"trial", trial.trial},
                   {"seed", trial.seed},
                   {"release_hash", trial.release_hash},
                   {"methods", methods}};
  if (!trial.s.empty()) {
    std::vector<int> s(trial.s.begin(), trial.s.end());
    j["s"] = s;
  }
  if (!trial.u.empty()) j["u"] = trial.u;
  return j;
}

inline TrialResult TrialFromJson(const nlohmann::json& j) {
  TrialResult trial;
  trial.trial = j.at("trial").get<int>();
  trial.seed = j.at("seed").get<std::uint64_t>();
  trial.release_hash = j.at("release_hash").get<std::uint64_t>();
  if (j.contains("s")) {
    for (int v : j.at("s").get<std::vector<int>>()) {
      trial.s.push_back(static_cast<std::int8_t>(v));
    }
  }
  if (j.contains("u")) trial.u = j.at("u").get<std::vector<int>>();
  for (const auto& jm : j.at("methods")) {
    MethodResult mr;
    mr.method = ScoreMethodFromName(jm.at("method").get<std::string>());
    mr.scores = jm.at("scores").get<std::vector<double>>();
    mr.eps_max = jm.at("eps_max").get<double>();
    if (jm.contains("eps_or")) {
      mr.has_or = true;
      mr.eps_or = jm.at("eps_or").get<double>();
      mr.or_sweep = internal::SweepFromJson(jm.at("or_sweep"));
    }
    if (jm.contains("eps_or_fdp")) {
      mr.has_fdp = true;
      mr.eps_fdp = jm.at("eps_or_fdp").get<double>();
      mr.fdp_sweep = internal::SweepFromJson(jm.at("fdp_sweep"));
    }
    if (jm.contains("regressor_nll_trace")) {
      mr.regressor_nll_trace =
          jm.at("regressor_nll_trace").get<std::vector<double>>();
    }
    if (jm.contains("sigma_clamps")) {
      mr.sigma_clamps = jm.at("sigma_clamps").get<std::int64_t>();
    }
    trial.methods.push_back(std::move(mr));
  }
  return trial;
}

inline nlohmann::json ResultToJson(const AuditResult& result) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : result.trials) trials.push_back(TrialToJson(t));
  nlohmann::json aggregates = nlohmann::json::array();
  for (const auto& row : Aggregate(result)) {
    nlohmann::json jr{{"method", ScoreMethodName(row.method)}};
    if (row.has_or) jr["mean_eps_or"] = row.mean_or;
    if (row.has_fdp) jr["mean_eps_or_fdp"] = row.mean_fdp;
    jr["mean_eps_max"] = row.mean_max;
    aggregates.push_back(std::move(jr));
  }
  nlohmann::json j{{"format", kResultFormat},
                   {"version", kResultVersion},
                   {"config", ConfigToJson(result.config)},
                   {"notes", ReportNotes()},
                   {"trials", trials},
                   {"aggregates", aggregates}};
  if (result.config.mechanism.kind == MechanismKind::kGaussian) {
    // Analytic (eps, delta) reference of the sensitivity-2 Gaussian
    // mechanism, for gap context only.
    nlohmann::json curve = nlohmann::json::array();
    for (int i = 0; i <= 12; ++i) {
      const double eps = 0.25 * i;
      curve.push_back(
          {{"eps", eps},
           {"delta",
            GaussianTradeoffDelta(eps, result.config.mechanism.noise_sigma)}});
    }
    j["gaussian_reference"] = curve;
  }
  return j;
}

inline AuditResult ResultFromJson(const nlohmann::json& j) {
  if (j.value("format", "") != kResultFormat) {
    throw ConfigError("result container: bad format tag");
  }
  if (j.value("version", -1) != kResultVersion) {
    throw ConfigError("result container: unsupported version");
  }
  AuditResult result;
  result.config = ConfigFromJson(j.at("config"));
  for (const auto& jt : j.at("trials")) {
    result.trials.push_back(TrialFromJson(jt));
  }
  // A result is complete only if every configured trial is present.
  std::vector<int> missing;
  for (int t = 0; t < result.config.trials; ++t) {
    bool found = false;
    for (const auto& trial : result.trials) {
      if (trial.trial == t) {
        found = true;
        break;
      }
    }
    if (!found) missing.push_back(t);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i) list += ", ";
      list += std::to_string(missing[i]);
    }
    throw ConfigError("partial result: missing trials " + list);
  }
  return result;
}

// RFC-4180-style CSV (CRLF line endings, no quoting needed for these
// fields): per-trial rows then mean rows, columns
// scope,trial,method,eps_or,eps_or_fdp,eps_max.
inline std::string SummaryCsv(const AuditResult& result) {
  if (result.trials.empty()) throw ConfigError("SummaryCsv: no trials");
  std::string out = "scope,trial,method,eps_or,eps_or_fdp,eps_max\r\n";
  for (const auto& trial : result.trials) {
    for (const auto& mr : trial.methods) {
      out += "trial," + std::to_string(trial.trial) + ",";
      out += ScoreMethodName(mr.method);
      out += ",";
      out += mr.has_or ? internal::FormatDouble(mr.eps_or) : "";
      out += ",";
      out += mr.has_fdp ? internal::FormatDouble(mr.eps_fdp) : "";
      out += ",";
      out += internal::FormatDouble(mr.eps_max);
      out += "\r\n";
    }
  }
  for (const auto& row : Aggregate(result)) {
    out += "mean,,";
    out += ScoreMethodName(row.method);
    out += ",";
    out += row.has_or ? internal::FormatDouble(row.mean_or) : "";
    out += ",";
    out += row.has_fdp ? internal::FormatDouble(row.mean_fdp) : "";
    out += ",";
    out += internal::FormatDouble(row.mean_max);
    out += "\r\n";
  }
  return out;
}

// Human-readable table with the caveat header.
inline std::string ReportTable(const AuditResult& result) {
  if (result.trials.empty()) throw ConfigError("ReportTable: no trials");
  std::ostringstream out;
  out << "audit report: " << result.config.name << "\n";
  out << "mechanism: " << MechanismName(result.config.mechanism.kind);
  if (result.config.mechanism.kind == MechanismKind::kRr) {
    out << " (eps_true = " << result.config.mechanism.eps_true << ")";
  }
  out << ", trials: " << result.config.trials
      << ", alpha: " << result.config.alpha << "\n";
  for (const auto& note : ReportNotes()) out << "note: " << note << "\n";
  out << "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-6s %-6s %-9s %10s %10s %10s\n",
                "scope", "trial", "method", "eps_or", "eps_fdp", "eps_max");
  out << line;
  auto fmt = [](bool has, double v) {
    if (!has) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  for (const auto& trial : result.trials) {
    for (const auto& mr : trial.methods) {
      std::snprintf(line, sizeof(line), "%-6s %-6d %-9s %10s %10s %10s\n",
                    "trial", trial.trial, ScoreMethodName(mr.method),
                    fmt(mr.has_or, mr.eps_or).c_str(),
                    fmt(mr.has_fdp, mr.eps_fdp).c_str(),
                    fmt(true, mr.eps_max).c_str());
      out << line;
    }
  }
  for (const auto& row : Aggregate(result)) {
    std::snprintf(line, sizeof(line), "%-6s %-6s %-9s %10s %10s %10s\n",
                  "mean", "-", ScoreMethodName(row.method),
                  fmt(row.has_or, row.mean_or).c_str(),
                  fmt(row.has_fdp, row.mean_fdp).c_str(),
                  fmt(row.has_max || true, row.mean_max).c_str());
    out << line;
  }
  return out.str();
}

// -------- run directory --------

// Layout: config.json, result.json, trials/trial_NNNN.json, regressors/
// trial_NNNN.json (quantile runs), summary.csv, MANIFEST (FNV-1a hash per
// file, sorted by path).
inline void WriteRunDir(const AuditResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::create_directories(dir + "/trials");

  std::map<std::string, std::string> files;
  files["config.json"] = ConfigToJson(result.config).dump(2) + "\n";
  files["result.json"] = ResultToJson(result).dump(2) + "\n";
  files["summary.csv"] = SummaryCsv(result);
  for (const auto& trial : result.trials) {
    char name[64];
    std::snprintf(name, sizeof(name), "trials/trial_%04d.json", trial.trial);
    files[name] = TrialToJson(trial).dump(2) + "\n";
    for (const auto& mr : trial.methods) {
      if (mr.method == ScoreMethod::kQuantile &&
          !mr.regressor_snapshot.is_null()) {
        fs::create_directories(dir + "/regressors");
        std::snprintf(name, sizeof(name), "regressors/trial_%04d.json",
                      trial.trial);
        files[name] = mr.regressor_snapshot.dump(2) + "\n";
      }
    }
  }

  std::string manifest;
  for (const auto& [rel, content] : files) {
    std::ofstream out(dir + "/" + rel, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/" + rel);
    out << content;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(Fnv1a64(content)));
    manifest += std::string(hash) + "  " + rel + "\n";
  }
  std::ofstream mf(dir + "/MANIFEST", std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write " + dir + "/MANIFEST");
  mf << manifest;
}

inline AuditResult LoadRunDir(const std::string& dir) {
  std::ifstream in(dir + "/result.json");
  if (!in) {
    throw std::runtime_error("no result.json under " + dir);
  }
  nlohmann::json j;
  in >> j;
  return ResultFromJson(j);
}

}  // namespace dpaudit

#endif  // DPAUDIT_REPORT_HPP_
