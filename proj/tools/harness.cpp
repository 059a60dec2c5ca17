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

// harness: benchmark runner, log renderer and scenario validator.

#include "chainplan/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>

namespace
{

using namespace chainplan;

int cmd_run(
  const std::string & config_file, const std::map<std::string, std::string> & flags,
  const std::vector<std::string> & sets)
{
  HarnessConfig cfg;
  try {
    if (!config_file.empty()) load_config_file(cfg, config_file);
    std::map<std::string, std::string> extra;
    for (const auto & kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      extra[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    apply_settings(cfg, extra);
    apply_settings(cfg, flags);
  } catch (const std::exception & e) {
    std::cerr << "harness: " << e.what() << "\n";
    return kExitUsage;
  }
  const BenchmarkOutcome out = run_benchmark(cfg);
  (out.exit_code == kExitOk ? std::cout : std::cerr) << "harness: " << out.summary << "\n";
  return out.exit_code;
}

int cmd_render(const std::string & log_path, const std::string & scenario_path, const std::string & out_path)
{
  try {
    const Scenario sc = load_scenario(scenario_path);
    const SimulationLog log = read_log_jsonl(log_path);
    std::ofstream out(out_path, std::ios::binary);
    out << render_svg(log, sc);
    if (!out) {
      std::cerr << "harness: cannot write " << out_path << "\n";
      return kExitData;
    }
  } catch (const std::exception & e) {
    std::cerr << "harness: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int cmd_validate(const std::string & dir)
{
  LoadedScenarios loaded;
  try {
    loaded = load_scenario_dir(dir);
  } catch (const std::exception & e) {
    std::cerr << "harness: " << e.what() << "\n";
    return kExitData;
  }
  for (const auto & sc : loaded.scenarios) std::cout << "ok      " << sc->id << "\n";
  for (const auto & p : loaded.problems) std::cout << "invalid " << p << "\n";
  if (loaded.files == 0) {
    std::cerr << "harness: no scenarios in " << dir << "\n";
    return kExitData;
  }
  return loaded.problems.empty() ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Closed-loop motion planning benchmark harness"};
  app.require_subcommand(1);

  std::string config_file;
  std::string scenarios;
  std::string planner;
  std::string mode;
  std::string endpoint;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::vector<std::string> sets;
  auto * run = app.add_subcommand("run", "run a planner over a scenario directory");
  run->add_option("--config", config_file, "TOML-style config file")->check(CLI::ExistingFile);
  auto * o_scen = run->add_option("--scenarios", scenarios, "scenario directory");
  auto * o_plan = run->add_option("--planner", planner, "log_replay | chain | idm_baseline | remote");
  auto * o_mode = run->add_option("--mode", mode, "open_loop | closed_nonreactive | closed_reactive | all");
  auto * o_end = run->add_option("--endpoint", endpoint, "http://host:port/path or cmd:<command>");
  auto * o_seed = run->add_option("--seed", seed, "decoding seed");
  auto * o_jobs = run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  auto * o_out = run->add_option("--out", out_dir, "output directory");
  run->add_option("--set", sets, "override a config key, key=value")->take_all();

  std::string log_path;
  std::string scenario_path;
  std::string svg_path;
  auto * render = app.add_subcommand("render", "render a simulation log as SVG");
  render->add_option("--log", log_path, "*.log.jsonl file")->required();
  render->add_option("--scenario", scenario_path, "scenario file")->required();
  render->add_option("--out", svg_path, "output SVG")->required();

  std::string validate_dir;
  auto * validate = app.add_subcommand("validate", "check scenario files against the schema");
  validate->add_option("--scenarios", validate_dir, "scenario directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      std::map<std::string, std::string> flags;
      if (*o_scen) flags["harness.scenarios"] = scenarios;
      if (*o_plan) flags["harness.planner"] = planner;
      if (*o_mode) flags["harness.mode"] = mode;
      if (*o_end) flags["remote.endpoint"] = endpoint;
      if (*o_seed) flags["harness.seed"] = std::to_string(seed);
      if (*o_jobs) flags["harness.jobs"] = std::to_string(jobs);
      if (*o_out) flags["harness.out"] = out_dir;
      return cmd_run(config_file, flags, sets);
    }
    if (*render) return cmd_render(log_path, scenario_path, svg_path);
    return cmd_validate(validate_dir);
  } catch (const std::exception & e) {
    std::cerr << "harness: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
