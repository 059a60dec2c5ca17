// Copyright 2026 The chainplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CHAINPLAN__HARNESS_HPP_
#define CHAINPLAN__HARNESS_HPP_

#include "chainplan/config.hpp"
#include "chainplan/log_io.hpp"
#include "chainplan/metrics.hpp"
#include "chainplan/planner.hpp"
#include "chainplan/render.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace chainplan
{

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// Score of one scenario in one mode. Exactly one of `open_loop` and
/// `closed_loop` is set when `error` is empty.
struct ScenarioResult
{
  std::string scenario_id;
  std::string planner;
  SimulationMode mode{SimulationMode::open_loop};
  std::optional<OpenLoopScore> open_loop;
  std::optional<ClosedLoopScore> closed_loop;
  std::string error;
};

struct Aggregate
{
  std::optional<double> ols;
  std::optional<double> nr_cls;
  std::optional<double> r_cls;
};

inline Aggregate aggregate(const std::vector<ScenarioResult> & results)
{
  double sums[3] = {0, 0, 0};
  std::size_t counts[3] = {0, 0, 0};
  for (const auto & r : results) {
    if (!r.error.empty()) continue;
    const auto i = static_cast<std::size_t>(r.mode);
    if (r.open_loop) {
      sums[i] += r.open_loop->ols;
    } else if (r.closed_loop) {
      sums[i] += r.closed_loop->score;
    } else {
      continue;
    }
    ++counts[i];
  }
  auto mean = [&](SimulationMode m) -> std::optional<double> {
    const auto i = static_cast<std::size_t>(m);
    if (counts[i] == 0) return std::nullopt;
    return sums[i] / static_cast<double>(counts[i]);
  };
  return {mean(SimulationMode::open_loop), mean(SimulationMode::closed_nonreactive), mean(SimulationMode::closed_reactive)};
}

namespace detail
{

inline nlohmann::ordered_json opt_json(const std::optional<double> & v)
{
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::string csv_num(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string csv_field(const std::string & s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const std::vector<ScenarioResult> & results, std::size_t skipped = 0)
{
  using nlohmann::ordered_json;
  ordered_json records = ordered_json::array();
  for (const auto & r : results) {
    ordered_json j;
    j["scenario_id"] = r.scenario_id;
    j["planner"] = r.planner;
    j["mode"] = std::string(to_string(r.mode));
    j["status"] = r.error.empty() ? "ok" : "error";
    if (!r.error.empty()) j["error"] = r.error;
    if (r.open_loop) {
      const auto & s = *r.open_loop;
      j["ols"] = s.ols;
      j["ade"] = s.ade;
      j["fde"] = s.fde;
      j["ahe"] = s.ahe;
      j["fhe"] = s.fhe;
      j["miss_rate"] = s.miss_rate;
      j["frames"] = s.frames;
      j["failed_frames"] = s.failed_frames;
    }
    if (r.closed_loop) {
      const auto & s = *r.closed_loop;
      j["cls"] = s.score;
      j["collision_free"] = s.collision_free;
      j["drivable_compliance"] = s.drivable_compliance;
      j["progress_ratio"] = s.progress_ratio;
      j["comfort"] = s.comfort;
      j["planner_failures"] = s.planner_failures;
    }
    records.push_back(std::move(j));
  }
  const Aggregate agg = aggregate(results);
  ordered_json doc;
  doc["aggregate"] = {{"ols", detail::opt_json(agg.ols)},
                      {"nr_cls", detail::opt_json(agg.nr_cls)},
                      {"r_cls", detail::opt_json(agg.r_cls)}};
  doc["scenarios"] = records;
  doc["skipped_scenarios"] = skipped;
  return doc;
}

inline std::string report_csv(const std::vector<ScenarioResult> & results)
{
  std::string out =
    "scenario_id,planner,mode,status,ols,ade,fde,ahe,fhe,miss_rate,cls,collision_free,drivable_compliance,"
    "progress_ratio,comfort,planner_failures\n";
  for (const auto & r : results) {
    out += detail::csv_field(r.scenario_id) + "," + r.planner + "," + std::string(to_string(r.mode)) + "," +
           (r.error.empty() ? "ok" : "error");
    if (r.open_loop) {
      const auto & s = *r.open_loop;
      out += "," + detail::csv_num(s.ols) + "," + detail::csv_num(s.ade) + "," + detail::csv_num(s.fde) + "," +
             detail::csv_num(s.ahe) + "," + detail::csv_num(s.fhe) + "," + detail::csv_num(s.miss_rate);
    } else {
      out += ",,,,,,";
    }
    if (r.closed_loop) {
      const auto & s = *r.closed_loop;
      out += "," + detail::csv_num(s.score) + "," + (s.collision_free ? "1" : "0") + "," +
             detail::csv_num(s.drivable_compliance) + "," + detail::csv_num(s.progress_ratio) + "," +
             detail::csv_num(s.comfort) + "," + std::to_string(s.planner_failures);
    } else {
      out += ",,,,,,";
    }
    out += "\n";
  }
  return out;
}

/// Writes report.json and report.csv into `dir`.
inline void emit_report(
  const std::vector<ScenarioResult> & results, const std::filesystem::path & dir, std::size_t skipped = 0)
{
  if (results.empty()) throw std::invalid_argument("emit_report needs at least one result");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto write = [&](const std::filesystem::path & p, const std::string & text) {
    std::ofstream out(p, std::ios::binary);
    if (!out || !(out << text)) throw std::runtime_error("cannot write " + p.string());
  };
  write(dir / "report.json", report_json(results, skipped).dump(2) + "\n");
  write(dir / "report.csv", report_csv(results));
}

struct LoadedScenarios
{
  std::vector<std::shared_ptr<const Scenario>> scenarios;
  std::vector<std::string> problems;  // one line per skipped file
  std::size_t files{0};
};

/// Loads every `*.json` in `dir`, sorted by file name. Bad files are
/// skipped and reported.
inline LoadedScenarios load_scenario_dir(const std::filesystem::path & dir)
{
  LoadedScenarios out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw ConfigError("scenario directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto & entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  out.files = files.size();
  for (const auto & f : files) {
    try {
      out.scenarios.push_back(std::make_shared<const Scenario>(load_scenario(f)));
    } catch (const std::exception & e) {
      out.problems.push_back(f.filename().string() + ": " + e.what());
    }
  }
  return out;
}

inline std::unique_ptr<Planner> make_planner(const HarnessConfig & cfg, std::shared_ptr<const Scenario> sc)
{
  switch (cfg.planner) {
    case PlannerKind::log_replay: return std::make_unique<LogReplayPlanner>(std::move(sc));
    case PlannerKind::chain: return std::make_unique<ChainPlanner>(cfg.chain);
    case PlannerKind::idm_baseline: return std::make_unique<IdmBaselinePlanner>(cfg.sim.idm, cfg.chain.stop_margin);
    case PlannerKind::remote: {
      DecodingParams d = cfg.decoding;
      d.seed = cfg.seed;
      return std::make_unique<RemotePlanner>(cfg.endpoint, cfg.remote_timeout, d, cfg.max_tokens);
    }
  }
  throw std::logic_error("unknown planner kind");
}

inline std::string file_stem_for(const std::string & id)
{
  std::string s;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    s += ok ? c : '_';
  }
  return s.empty() ? "scenario" : s;
}

/// Runs, scores, logs and renders one scenario in one mode.
inline ScenarioResult run_scenario(
  const HarnessConfig & cfg, const std::shared_ptr<const Scenario> & sc, SimulationMode mode,
  const std::filesystem::path & out_dir)
{
  ScenarioResult r;
  r.scenario_id = sc->id;
  r.planner = std::string(to_string(cfg.planner));
  r.mode = mode;
  SimulationConfig sim = cfg.sim;
  sim.mode = mode;
  auto planner = make_planner(cfg, sc);
  SimulationLog log;
  if (mode == SimulationMode::open_loop) {
    const OpenLoopResult ol = run_open_loop(*sc, *planner, sim);
    const auto errors = frame_errors(ol);
    r.open_loop = open_loop_score(errors, cfg.metrics);
    log = open_loop_as_log(*sc, ol, r.planner);
  } else {
    log = run_closed_loop(*sc, *planner, sim);
    r.closed_loop = closed_loop_score(log, *sc, cfg.metrics);
  }
  const std::string stem = file_stem_for(sc->id) + "." + std::string(to_string(mode));
  write_log_jsonl(out_dir / (stem + ".log.jsonl"), log);
  std::ofstream svg(out_dir / (stem + ".svg"), std::ios::binary);
  svg << render_svg(log, *sc);
  if (!svg) throw std::runtime_error("cannot write " + (out_dir / (stem + ".svg")).string());
  return r;
}

struct BenchmarkOutcome
{
  int exit_code{kExitOk};
  std::vector<ScenarioResult> results;
  std::string summary;
};

/// Runs every scenario in every configured mode on a pool of `jobs`
/// workers. Results are kept in (scenario, mode) order regardless of
/// completion order.
inline BenchmarkOutcome run_benchmark(const HarnessConfig & cfg, std::ostream & warn = std::cerr)
{
  BenchmarkOutcome outcome;
  try {
    validate(cfg);
  } catch (const std::exception & e) {
    outcome.exit_code = kExitUsage;
    outcome.summary = std::string("invalid config: ") + e.what();
    return outcome;
  }
  LoadedScenarios loaded;
  try {
    loaded = load_scenario_dir(cfg.scenario_dir);
  } catch (const std::exception & e) {
    outcome.exit_code = kExitData;
    outcome.summary = e.what();
    return outcome;
  }
  for (const auto & p : loaded.problems) warn << "warning: skipped " << p << "\n";
  if (loaded.scenarios.empty()) {
    outcome.exit_code = kExitData;
    outcome.summary = loaded.files == 0 ? "no scenarios in " + cfg.scenario_dir.string()
                                        : "no scenarios could be loaded from " + cfg.scenario_dir.string();
    return outcome;
  }
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (!std::filesystem::is_directory(cfg.output_dir)) {
    outcome.exit_code = kExitData;
    outcome.summary = "cannot create output directory " + cfg.output_dir.string();
    return outcome;
  }

  const std::size_t n_modes = cfg.modes.size();
  const std::size_t n_jobs = loaded.scenarios.size() * n_modes;
  outcome.results.resize(n_jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_jobs; i = next++) {
      const auto & sc = loaded.scenarios[i / n_modes];
      const SimulationMode mode = cfg.modes[i % n_modes];
      try {
        outcome.results[i] = run_scenario(cfg, sc, mode, cfg.output_dir);
      } catch (const std::exception & e) {
        ScenarioResult r;
        r.scenario_id = sc->id;
        r.planner = std::string(to_string(cfg.planner));
        r.mode = mode;
        r.error = e.what();
        outcome.results[i] = std::move(r);
      }
    }
  };
  const std::size_t threads = std::min(cfg.jobs, n_jobs);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto & t : pool) t.join();

  std::size_t failed = 0;
  for (const auto & r : outcome.results) {
    if (!r.error.empty()) {
      ++failed;
      warn << "error: " << r.scenario_id << " (" << to_string(r.mode) << "): " << r.error << "\n";
    }
  }
  try {
    emit_report(outcome.results, cfg.output_dir, loaded.problems.size());
  } catch (const std::exception & e) {
    outcome.exit_code = kExitData;
    outcome.summary = e.what();
    return outcome;
  }

  const Aggregate agg = aggregate(outcome.results);
  auto show = [](const std::optional<double> & v) { return v ? detail::csv_num(*v) : std::string("n/a"); };
  outcome.summary = std::to_string(loaded.scenarios.size()) + " scenarios, " + std::to_string(failed) +
                    " failed runs, " + std::to_string(loaded.problems.size()) + " skipped files; ols " +
                    show(agg.ols) + ", nr_cls " + show(agg.nr_cls) + ", r_cls " + show(agg.r_cls);
  if (failed > 0) {
    outcome.exit_code = kExitInternal;
  } else if (!loaded.problems.empty()) {
    outcome.exit_code = kExitData;
  }
  return outcome;
}

}  // namespace chainplan

#endif  // CHAINPLAN__HARNESS_HPP_
