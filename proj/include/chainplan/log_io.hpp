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

#ifndef CHAINPLAN__LOG_IO_HPP_
#define CHAINPLAN__LOG_IO_HPP_

#include "chainplan/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace chainplan
{

class LogFormatError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

namespace detail
{

template <typename E, std::size_t N>
E enum_from(const std::string & s, const E (&values)[N], const char * what)
{
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw LogFormatError(std::string("unknown ") + what + " '" + s + "'");
}

inline nlohmann::json optional_number(const std::optional<double> & v)
{
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> read_optional(const nlohmann::json & j)
{
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json trace_to_json(const ReasoningTrace & tr)
{
  using nlohmann::json;
  json hazards = json::array();
  for (const auto & h : tr.hazards) {
    hazards.push_back({{"agent_id", h.agent_id},
                       {"min_distance", h.min_distance},
                       {"time_of_min", h.time_of_min},
                       {"level", std::string(to_string(h.level))},
                       {"truncated", h.truncated}});
  }
  return {{"preliminary", std::string(to_string(tr.preliminary))},
          {"hazards", hazards},
          {"traffic",
           {{"light_action", std::string(to_string(tr.traffic.light_action))},
            {"speed_cap", tr.traffic.speed_cap},
            {"accel_suppressed", tr.traffic.accel_suppressed},
            {"lane_violation", tr.traffic.lane_violation},
            {"stop_line_s", detail::optional_number(tr.traffic.stop_line_s)}}},
          {"final",
           {{"intent", std::string(to_string(tr.final_action.intent))},
            {"target_speed", tr.final_action.target_speed},
            {"stop_at_s", detail::optional_number(tr.final_action.stop_at_s)},
            {"emergency", tr.final_action.emergency}}},
          {"narrative", tr.narrative}};
}

inline ReasoningTrace trace_from_json(const nlohmann::json & j)
{
  static constexpr ManeuverIntent kIntents[] = {
    ManeuverIntent::keep_lane, ManeuverIntent::lane_change_left, ManeuverIntent::lane_change_right,
    ManeuverIntent::turn_left, ManeuverIntent::turn_right,       ManeuverIntent::stop,
    ManeuverIntent::yield};
  static constexpr HazardLevel kLevels[] = {HazardLevel::none, HazardLevel::hazard, HazardLevel::critical};
  static constexpr LightAction kLights[] = {
    LightAction::full_stop, LightAction::caution, LightAction::proceed, LightAction::none};
  ReasoningTrace tr;
  tr.preliminary = detail::enum_from(j.at("preliminary").get<std::string>(), kIntents, "intent");
  for (const auto & h : j.at("hazards")) {
    HazardAssessment a;
    a.agent_id = h.at("agent_id").get<std::string>();
    a.min_distance = h.at("min_distance").get<double>();
    a.time_of_min = h.at("time_of_min").get<double>();
    a.level = detail::enum_from(h.at("level").get<std::string>(), kLevels, "hazard level");
    a.truncated = h.at("truncated").get<bool>();
    tr.hazards.push_back(std::move(a));
  }
  const auto & t = j.at("traffic");
  tr.traffic.light_action = detail::enum_from(t.at("light_action").get<std::string>(), kLights, "light action");
  tr.traffic.speed_cap = t.at("speed_cap").get<double>();
  tr.traffic.accel_suppressed = t.at("accel_suppressed").get<bool>();
  tr.traffic.lane_violation = t.at("lane_violation").get<bool>();
  tr.traffic.stop_line_s = detail::read_optional(t.at("stop_line_s"));
  const auto & f = j.at("final");
  tr.final_action.intent = detail::enum_from(f.at("intent").get<std::string>(), kIntents, "intent");
  tr.final_action.target_speed = f.at("target_speed").get<double>();
  tr.final_action.stop_at_s = detail::read_optional(f.at("stop_at_s"));
  tr.final_action.emergency = f.at("emergency").get<bool>();
  tr.narrative = j.at("narrative").get<std::vector<std::string>>();
  return tr;
}

inline nlohmann::json tick_to_json(const Tick & tick, const SimulationLog & log)
{
  using nlohmann::json;
  json agents = json::array();
  for (const auto & a : tick.agents) {
    agents.push_back({{"id", a.id},
                      {"category", std::string(to_string(a.category))},
                      {"x", a.pose.x},
                      {"y", a.pose.y},
                      {"yaw", a.pose.yaw},
                      {"v", a.velocity},
                      {"length", a.length},
                      {"width", a.width}});
  }
  json plan = nullptr;
  if (tick.active_plan) {
    json poses = json::array();
    for (const auto & p : tick.active_plan->poses) poses.push_back({p.x, p.y, p.yaw});
    plan = {{"t0", tick.active_plan->start_time}, {"dt", tick.active_plan->dt}, {"poses", poses}};
  }
  return {{"scenario_id", log.scenario_id},
          {"planner", log.planner},
          {"mode", std::string(to_string(log.config.mode))},
          {"substep", log.config.substep},
          {"t", tick.t},
          {"ego", {{"x", tick.ego.pose.x}, {"y", tick.ego.pose.y}, {"yaw", tick.ego.pose.yaw}, {"v", tick.ego.velocity}}},
          {"acceleration", tick.acceleration},
          {"control", {{"acceleration", tick.control.acceleration}, {"steering", tick.control.steering_angle}}},
          {"agents", agents},
          {"plan", plan},
          {"trace", tick.trace ? trace_to_json(*tick.trace) : json(nullptr)},
          {"trace_text", tick.trace_text},
          {"planner_failures", tick.planner_failures},
          {"replanned", tick.replanned},
          {"replay_fallbacks", tick.replay_fallbacks}};
}

/// One JSON object per tick, newline separated.
inline void write_log_jsonl(std::ostream & out, const SimulationLog & log)
{
  for (const auto & tick : log.ticks) {
    out << tick_to_json(tick, log).dump() << '\n';
  }
}

inline void write_log_jsonl(const std::filesystem::path & path, const SimulationLog & log)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_log_jsonl(out, log);
}

inline SimulationLog read_log_jsonl(std::istream & in)
{
  static constexpr SimulationMode kModes[] = {
    SimulationMode::open_loop, SimulationMode::closed_nonreactive, SimulationMode::closed_reactive};
  SimulationLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (log.ticks.empty()) {
        log.scenario_id = j.at("scenario_id").get<std::string>();
        log.planner = j.at("planner").get<std::string>();
        log.config.mode = detail::enum_from(j.at("mode").get<std::string>(), kModes, "mode");
        log.config.substep = j.at("substep").get<double>();
      }
      Tick tick;
      tick.t = j.at("t").get<double>();
      const auto & e = j.at("ego");
      tick.ego.pose = {e.at("x").get<double>(), e.at("y").get<double>(), e.at("yaw").get<double>()};
      tick.ego.velocity = e.at("v").get<double>();
      tick.acceleration = j.at("acceleration").get<double>();
      tick.control.acceleration = j.at("control").at("acceleration").get<double>();
      tick.control.steering_angle = j.at("control").at("steering").get<double>();
      for (const auto & a : j.at("agents")) {
        AgentObservation o;
        o.id = a.at("id").get<std::string>();
        const auto cat = parse_category(a.at("category").get<std::string>());
        if (!cat) throw LogFormatError("unknown agent category");
        o.category = *cat;
        o.pose = {a.at("x").get<double>(), a.at("y").get<double>(), a.at("yaw").get<double>()};
        o.velocity = a.at("v").get<double>();
        o.length = a.at("length").get<double>();
        o.width = a.at("width").get<double>();
        tick.agents.push_back(std::move(o));
      }
      if (!j.at("plan").is_null()) {
        const auto & p = j.at("plan");
        Trajectory traj{p.at("t0").get<double>(), p.at("dt").get<double>(), {}};
        for (const auto & q : p.at("poses")) traj.poses.push_back({q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>()});
        tick.active_plan = std::make_shared<const Trajectory>(std::move(traj));
      }
      if (!j.at("trace").is_null()) tick.trace = trace_from_json(j.at("trace"));
      tick.trace_text = j.at("trace_text").get<std::string>();
      tick.planner_failures = j.at("planner_failures").get<std::size_t>();
      tick.replanned = j.at("replanned").get<bool>();
      tick.replay_fallbacks = j.at("replay_fallbacks").get<std::vector<std::string>>();
      log.ticks.push_back(std::move(tick));
    } catch (const LogFormatError &) {
      throw;
    } catch (const std::exception & ex) {
      throw LogFormatError("log line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  if (log.ticks.empty()) throw LogFormatError("log has no ticks");
  return log;
}

inline SimulationLog read_log_jsonl(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogFormatError("cannot read " + path.string());
  return read_log_jsonl(in);
}

}  // namespace chainplan

#endif  // CHAINPLAN__LOG_IO_HPP_
