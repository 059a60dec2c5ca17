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

#ifndef CHAINPLAN__CONFIG_HPP_
#define CHAINPLAN__CONFIG_HPP_

#include "chainplan/chain_planner.hpp"
#include "chainplan/language.hpp"
#include "chainplan/metrics.hpp"
#include "chainplan/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainplan
{

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Flattened `table.key -> value` pairs from a TOML-style file: `[table]`
/// headers (dotted names allowed), `key = value` lines, `#` comments.
/// Quoted values lose their quotes.
inline std::map<std::string, std::string> parse_config_text(std::string_view text)
{
  std::map<std::string, std::string> out;
  std::string table;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated table header");
      }
      table = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    out[table.empty() ? key : table + "." + key] = value;
  }
  return out;
}

enum class PlannerKind { log_replay, chain, idm_baseline, remote };

inline std::string_view to_string(PlannerKind p)
{
  switch (p) {
    case PlannerKind::log_replay: return "log_replay";
    case PlannerKind::chain: return "chain";
    case PlannerKind::idm_baseline: return "idm_baseline";
    case PlannerKind::remote: return "remote";
  }
  return "chain";
}

inline std::optional<PlannerKind> parse_planner_kind(std::string_view s)
{
  for (auto p : {PlannerKind::log_replay, PlannerKind::chain, PlannerKind::idm_baseline, PlannerKind::remote}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

struct HarnessConfig
{
  std::filesystem::path scenario_dir;
  PlannerKind planner{PlannerKind::chain};
  std::vector<SimulationMode> modes{SimulationMode::open_loop};
  std::uint64_t seed{0};
  std::filesystem::path output_dir;
  std::string endpoint;
  double remote_timeout{5.0};
  std::size_t jobs{1};
  SimulationConfig sim;
  ChainConfig chain;
  MetricsConfig metrics;
  DecodingParams decoding;
  int max_tokens{1024};
  /// Every key that was set from a file or flag, for the report.
  std::map<std::string, std::string> overrides;
};

inline std::vector<SimulationMode> parse_modes(std::string_view s)
{
  if (s == "all") {
    return {SimulationMode::open_loop, SimulationMode::closed_nonreactive, SimulationMode::closed_reactive};
  }
  const auto m = parse_mode(s);
  if (!m) {
    throw ConfigError("unknown mode '" + std::string(s) + "'");
  }
  return {*m};
}

namespace detail
{

inline double to_double(const std::string & key, const std::string & v)
{
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception &) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline bool to_bool(const std::string & key, const std::string & v)
{
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

using Setter = std::function<void(HarnessConfig &, const std::string &, const std::string &)>;

template <typename Get>
Setter number_setter(Get get)
{
  return [get](HarnessConfig & c, const std::string & k, const std::string & v) { get(c) = to_double(k, v); };
}

template <typename Get>
Setter count_setter(Get get)
{
  return [get](HarnessConfig & c, const std::string & k, const std::string & v) {
    const double d = to_double(k, v);
    if (d < 0 || d != std::floor(d)) throw ConfigError(k + ": expected a nonnegative integer");
    get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(d);
  };
}

template <typename Get>
Setter bool_setter(Get get)
{
  return [get](HarnessConfig & c, const std::string & k, const std::string & v) { get(c) = to_bool(k, v); };
}

inline const std::map<std::string, Setter> & setters()
{
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
#define CHAINPLAN_NUM(key, member) t[key] = number_setter([](HarnessConfig & c) -> double & { return c.member; })
#define CHAINPLAN_CNT(key, member) t[key] = count_setter([](HarnessConfig & c) -> auto & { return c.member; })
#define CHAINPLAN_BOOL(key, member) t[key] = bool_setter([](HarnessConfig & c) -> bool & { return c.member; })
    CHAINPLAN_NUM("ego.length", sim.geometry.length);
    CHAINPLAN_NUM("ego.width", sim.geometry.width);
    CHAINPLAN_NUM("ego.wheelbase", sim.geometry.wheelbase);
    CHAINPLAN_NUM("limits.min_accel", sim.limits.min_accel);
    CHAINPLAN_NUM("limits.max_accel", sim.limits.max_accel);
    CHAINPLAN_NUM("limits.max_steer", sim.limits.max_steer);
    CHAINPLAN_NUM("lqr.q_lateral", sim.lqr.q_lateral);
    CHAINPLAN_NUM("lqr.q_heading", sim.lqr.q_heading);
    CHAINPLAN_NUM("lqr.q_velocity", sim.lqr.q_velocity);
    CHAINPLAN_NUM("lqr.r_steer", sim.lqr.r_steer);
    CHAINPLAN_NUM("lqr.r_accel", sim.lqr.r_accel);
    CHAINPLAN_CNT("lqr.horizon_steps", sim.lqr.horizon_steps);
    CHAINPLAN_CNT("agents.cap", sim.agent_cap);
    CHAINPLAN_NUM("agents.idm.time_headway", sim.idm.time_headway);
    CHAINPLAN_NUM("agents.idm.min_gap", sim.idm.min_gap);
    CHAINPLAN_NUM("agents.idm.max_accel", sim.idm.max_accel);
    CHAINPLAN_NUM("agents.idm.comfort_decel", sim.idm.comfort_decel);
    CHAINPLAN_NUM("agents.idm.exponent", sim.idm.exponent);
    CHAINPLAN_NUM("agents.idm.max_decel", sim.idm.max_decel);
    t["agents.idm.desired_speed"] = [](HarnessConfig & c, const std::string & k, const std::string & v) {
      c.sim.idm.desired_speed = to_double(k, v);
      c.sim.idm_speed_from_limit = false;
    };
    CHAINPLAN_NUM("simulation.replan_interval", sim.replan_interval);
    CHAINPLAN_NUM("simulation.substep", sim.substep);
    CHAINPLAN_NUM("simulation.fallback_decel", sim.fallback_decel);
    t["simulation.duration"] = [](HarnessConfig & c, const std::string & k, const std::string & v) {
      c.sim.duration = to_double(k, v);
    };
    CHAINPLAN_NUM("chain.critical_distance", chain.critical_distance);
    CHAINPLAN_NUM("chain.hazard_distance", chain.hazard_distance);
    CHAINPLAN_BOOL("chain.footprint_clearance", chain.footprint_clearance);
    CHAINPLAN_NUM("chain.hazard_slowdown", chain.hazard_slowdown);
    CHAINPLAN_NUM("chain.caution_slowdown", chain.caution_slowdown);
    CHAINPLAN_NUM("chain.suppress_accel_ratio", chain.suppress_accel_ratio);
    CHAINPLAN_NUM("chain.turn_curvature", chain.turn_curvature);
    CHAINPLAN_NUM("chain.lane_change_duration", chain.lane_change_duration);
    CHAINPLAN_NUM("chain.accel", chain.accel);
    CHAINPLAN_NUM("chain.comfort_decel", chain.comfort_decel);
    CHAINPLAN_NUM("chain.emergency_decel", chain.emergency_decel);
    CHAINPLAN_NUM("chain.stop_margin", chain.stop_margin);
    CHAINPLAN_NUM("metrics.miss_threshold", metrics.miss_threshold);
    CHAINPLAN_NUM("metrics.sigma_distance", metrics.sigma_distance);
    CHAINPLAN_NUM("metrics.sigma_heading", metrics.sigma_heading);
    CHAINPLAN_NUM("metrics.comfort_accel", metrics.comfort_accel);
    CHAINPLAN_NUM("metrics.comfort_jerk", metrics.comfort_jerk);
    CHAINPLAN_NUM("decoding.temperature", decoding.temperature);
    CHAINPLAN_NUM("decoding.top_p", decoding.top_p);
    CHAINPLAN_CNT("decoding.max_tokens", max_tokens);
    CHAINPLAN_NUM("remote.timeout_s", remote_timeout);
    t["remote.endpoint"] = [](HarnessConfig & c, const std::string &, const std::string & v) { c.endpoint = v; };
    t["harness.scenarios"] = [](HarnessConfig & c, const std::string &, const std::string & v) { c.scenario_dir = v; };
    t["harness.out"] = [](HarnessConfig & c, const std::string &, const std::string & v) { c.output_dir = v; };
    t["harness.planner"] = [](HarnessConfig & c, const std::string & k, const std::string & v) {
      const auto p = parse_planner_kind(v);
      if (!p) throw ConfigError(k + ": unknown planner '" + v + "'");
      c.planner = *p;
    };
    t["harness.mode"] = [](HarnessConfig & c, const std::string &, const std::string & v) { c.modes = parse_modes(v); };
    t["harness.seed"] = [](HarnessConfig & c, const std::string & k, const std::string & v) {
      try {
        std::size_t used = 0;
        if (v.empty() || v.front() == '-') throw std::invalid_argument(v);
        c.seed = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception &) {
        throw ConfigError(k + ": expected a nonnegative integer, got '" + v + "'");
      }
    };
    CHAINPLAN_CNT("harness.jobs", jobs);
#undef CHAINPLAN_NUM
#undef CHAINPLAN_CNT
#undef CHAINPLAN_BOOL
    return t;
  }();
  return table;
}

}  // namespace detail

/// Applies `key -> value` settings; unknown keys are an error.
inline void apply_settings(HarnessConfig & cfg, const std::map<std::string, std::string> & settings)
{
  const auto & table = detail::setters();
  for (const auto & [k, v] : settings) {
    const auto it = table.find(k);
    if (it == table.end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
    it->second(cfg, k, v);
    cfg.overrides[k] = v;
  }
}

inline void load_config_file(HarnessConfig & cfg, const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  apply_settings(cfg, parse_config_text(buf.str()));
}

/// Rejects combinations the run cannot honor.
inline void validate(const HarnessConfig & cfg)
{
  if (cfg.scenario_dir.empty()) throw ConfigError("no scenario directory given");
  if (cfg.output_dir.empty()) throw ConfigError("no output directory given");
  if (cfg.planner == PlannerKind::remote && cfg.endpoint.empty()) {
    throw ConfigError("the remote planner needs an endpoint");
  }
  if (cfg.jobs == 0) throw ConfigError("jobs must be at least 1");
  if (cfg.modes.empty()) throw ConfigError("no simulation mode");
  cfg.sim.replan_every();
  cfg.decoding.validate();
  cfg.sim.idm.validate();
  (void)tracking_error_model(cfg.sim.lqr);
}

}  // namespace chainplan

#endif  // CHAINPLAN__CONFIG_HPP_
