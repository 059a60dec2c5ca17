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

#ifndef CHAINPLAN__SCENARIO_HPP_
#define CHAINPLAN__SCENARIO_HPP_

#include "chainplan/geometry.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chainplan
{

// ---------------------------------------------------------------------------
// Value types
// ---------------------------------------------------------------------------

struct Pose
{
  double x{0.0};
  double y{0.0};
  double yaw{0.0};

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose &, const Pose &) = default;
};

/// Expresses `p` in the frame whose origin and x-axis are given by `anchor`.
inline Pose to_frame(const Pose & p, const Pose & anchor)
{
  const Vec2 local = rotate(p.position() - anchor.position(), -anchor.yaw);
  return {local.x, local.y, wrap_angle(p.yaw - anchor.yaw)};
}

/// Inverse of to_frame.
inline Pose from_frame(const Pose & p, const Pose & anchor)
{
  const Vec2 world = rotate(p.position(), anchor.yaw) + anchor.position();
  return {world.x, world.y, wrap_angle(p.yaw + anchor.yaw)};
}

/// Uniformly timed pose sequence.
struct Trajectory
{
  double start_time{0.0};
  double dt{0.5};
  std::vector<Pose> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }
  double end_time() const { return start_time + dt * static_cast<double>(poses.empty() ? 0 : poses.size() - 1); }
  double time_at(std::size_t i) const { return start_time + dt * static_cast<double>(i); }

  /// Pose at time t, linear in position and shorter-arc in yaw, clamped to
  /// the covered interval. Grid-aligned times return the stored pose exactly.
  Pose sample(double t) const
  {
    if (poses.empty()) {
      throw std::logic_error("sample on empty trajectory");
    }
    const double u = (t - start_time) / dt;
    if (u <= 0.0) {
      return poses.front();
    }
    const double last = static_cast<double>(poses.size() - 1);
    if (u >= last) {
      return poses.back();
    }
    const double k = std::round(u);
    if (std::abs(u - k) < 1e-9) {
      return poses[static_cast<std::size_t>(k)];
    }
    const auto i = static_cast<std::size_t>(std::floor(u));
    const double f = u - static_cast<double>(i);
    const Pose & a = poses[i];
    const Pose & b = poses[i + 1];
    return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), interpolate_angle(a.yaw, b.yaw, f)};
  }

  /// Mean speed over the segment containing t (finite difference of poses).
  double segment_speed(double t) const
  {
    if (poses.size() < 2) {
      return 0.0;
    }
    const double u = (t - start_time) / dt;
    const auto last_seg = static_cast<double>(poses.size() - 2);
    const auto i = static_cast<std::size_t>(std::clamp(std::floor(u + 1e-9), 0.0, last_seg));
    return distance(poses[i + 1].position(), poses[i].position()) / dt;
  }
};

enum class AgentCategory { vehicle, cyclist, pedestrian };
enum class TrafficLight { red, yellow, green, none };
enum class Goal { follow_lane, turn_left, turn_right, lane_change_left, lane_change_right, yield, stop };

inline std::string_view to_string(AgentCategory c)
{
  switch (c) {
    case AgentCategory::vehicle: return "vehicle";
    case AgentCategory::cyclist: return "cyclist";
    case AgentCategory::pedestrian: return "pedestrian";
  }
  return "vehicle";
}

inline std::string_view to_string(TrafficLight l)
{
  switch (l) {
    case TrafficLight::red: return "red";
    case TrafficLight::yellow: return "yellow";
    case TrafficLight::green: return "green";
    case TrafficLight::none: return "none";
  }
  return "none";
}

inline std::string_view to_string(Goal g)
{
  switch (g) {
    case Goal::follow_lane: return "follow_lane";
    case Goal::turn_left: return "turn_left";
    case Goal::turn_right: return "turn_right";
    case Goal::lane_change_left: return "lane_change_left";
    case Goal::lane_change_right: return "lane_change_right";
    case Goal::yield: return "yield";
    case Goal::stop: return "stop";
  }
  return "follow_lane";
}

inline std::optional<AgentCategory> parse_category(std::string_view s)
{
  for (auto c : {AgentCategory::vehicle, AgentCategory::cyclist, AgentCategory::pedestrian}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

inline std::optional<TrafficLight> parse_traffic_light(std::string_view s)
{
  for (auto l : {TrafficLight::red, TrafficLight::yellow, TrafficLight::green, TrafficLight::none}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

inline std::optional<Goal> parse_goal(std::string_view s)
{
  for (auto g : {Goal::follow_lane, Goal::turn_left, Goal::turn_right, Goal::lane_change_left,
                 Goal::lane_change_right, Goal::yield, Goal::stop}) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

/// Ego footprint and steering geometry. Not part of the scenario file.
struct EgoGeometry
{
  double length{4.8};
  double width{2.0};
  double wheelbase{2.7};
};

struct EgoState
{
  Pose pose;
  double velocity{0.0};
  double acceleration{0.0};
  double length{4.8};
  double width{2.0};
  Trajectory history;

  OrientedBox footprint() const { return {pose.position(), pose.yaw, length, width}; }
};

struct AgentSample
{
  double t{0.0};
  double x{0.0};
  double y{0.0};
  double yaw{0.0};
  double v{0.0};
};

/// Logged motion of one background agent, on the scenario frame grid.
struct AgentTrack
{
  std::string id;
  AgentCategory category{AgentCategory::vehicle};
  double length{4.5};
  double width{1.8};
  std::vector<AgentSample> log;

  bool covers(double t) const
  {
    return !log.empty() && t >= log.front().t - 1e-9 && t <= log.back().t + 1e-9;
  }

  /// Logged state at t; exact on grid timestamps, interpolated between them,
  /// held at the ends.
  AgentSample sample(double t) const
  {
    if (t <= log.front().t) return log.front();
    if (t >= log.back().t) return log.back();
    const double step = log.size() > 1 ? log[1].t - log[0].t : 1.0;
    const double u = (t - log.front().t) / step;
    const double k = std::round(u);
    if (std::abs(u - k) < 1e-6) {
      return log[std::min(static_cast<std::size_t>(k), log.size() - 1)];
    }
    const auto i = std::min(static_cast<std::size_t>(std::floor(u)), log.size() - 2);
    const double f = (t - log[i].t) / (log[i + 1].t - log[i].t);
    const AgentSample & a = log[i];
    const AgentSample & b = log[i + 1];
    return {t, a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), interpolate_angle(a.yaw, b.yaw, f),
            a.v + f * (b.v - a.v)};
  }
};

struct AgentObservation
{
  std::string id;
  AgentCategory category{AgentCategory::vehicle};
  Pose pose;
  double velocity{0.0};
  double length{4.5};
  double width{1.8};
  Trajectory predicted;
  /// Source log, used for replay during simulation. May be null.
  std::shared_ptr<const AgentTrack> track;

  OrientedBox footprint() const { return {pose.position(), pose.yaw, length, width}; }
};

struct MapContext
{
  Polyline centerline;
  double lane_half_width{1.75};
  TrafficLight traffic_light{TrafficLight::none};
  std::optional<double> stop_line_s;
  double speed_limit{13.9};

  std::vector<Pose> centerline_poses() const
  {
    std::vector<Pose> out;
    const auto pts = centerline.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::size_t seg = std::min(i, pts.size() - 2);
      out.push_back({pts[i].x, pts[i].y, centerline.segment_heading(seg)});
    }
    return out;
  }
};

struct Instruction
{
  Goal goal{Goal::follow_lane};
  std::string free_text;
};

/// Description of the ego motion system handed to the planner.
struct MotionSystem
{
  bool ego_centric{false};
  /// Yaw is measured counter-clockwise from +x in radians.
  bool heading_ccw_from_x{true};
  /// World pose of the frame origin (the ego pose once ego-centric).
  Pose frame_origin;
  double length{4.8};
  double width{2.0};
  double wheelbase{2.7};
};

/// Everything a planner sees for one decision.
struct PlanningContext
{
  std::vector<AgentObservation> observations;
  MapContext map;
  EgoState ego;
  MotionSystem system;
  Instruction instruction;
  double timestamp{0.0};
  double plan_horizon{8.0};
  double resolution{0.5};

  std::size_t plan_steps() const { return static_cast<std::size_t>(std::llround(plan_horizon / resolution)); }
};

struct EgoSample
{
  double t{0.0};
  double x{0.0};
  double y{0.0};
  double yaw{0.0};
  double v{0.0};
  double a{0.0};

  Pose pose() const { return {x, y, yaw}; }
};

/// A logged driving scenario. Frame i is ego_log[i].
struct Scenario
{
  std::string id;
  double resolution{0.5};
  double history_horizon{2.0};
  double plan_horizon{8.0};
  MapContext map;
  std::vector<EgoSample> ego_log;
  std::vector<std::shared_ptr<const AgentTrack>> agents;
  Instruction instruction;
  std::map<std::string, std::string> metadata;

  std::size_t frame_count() const { return ego_log.size(); }
  double frame_time(std::size_t i) const { return ego_log[i].t; }
  std::size_t history_steps() const { return static_cast<std::size_t>(std::llround(history_horizon / resolution)); }
  std::size_t plan_steps() const { return static_cast<std::size_t>(std::llround(plan_horizon / resolution)); }

  /// Logged ego pose at t (frame-aligned or interpolated, clamped at the ends).
  EgoSample ego_at(double t) const
  {
    if (t <= ego_log.front().t) return ego_log.front();
    if (t >= ego_log.back().t) return ego_log.back();
    const double u = (t - ego_log.front().t) / resolution;
    const double k = std::round(u);
    if (std::abs(u - k) < 1e-6) {
      return ego_log[static_cast<std::size_t>(k)];
    }
    const auto i = std::min(static_cast<std::size_t>(std::floor(u)), ego_log.size() - 2);
    const double f = u - static_cast<double>(i);
    const EgoSample & a = ego_log[i];
    const EgoSample & b = ego_log[i + 1];
    return {t, a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), interpolate_angle(a.yaw, b.yaw, f),
            a.v + f * (b.v - a.v), a.a + f * (b.a - a.a)};
  }
};

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

class ScenarioError : public std::runtime_error
{
public:
  ScenarioError(std::string field, const std::string & what)
  : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field))
  {
  }
  const std::string & field() const { return field_; }

private:
  std::string field_;
};

namespace detail
{

using json = nlohmann::json;

inline void reject_unknown_keys(const json & obj, std::initializer_list<std::string_view> allowed, const std::string & path)
{
  if (!obj.is_object()) {
    throw ScenarioError(path, "expected an object");
  }
  for (const auto & item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ScenarioError(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
    }
  }
}

inline const json & require(const json & obj, const std::string & key, const std::string & path)
{
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ScenarioError(path.empty() ? key : path + "." + key, "missing required key");
  }
  return *it;
}

inline std::string join_path(const std::string & path, const std::string & key)
{
  return path.empty() ? key : path + "." + key;
}

inline double number(const json & obj, const std::string & key, const std::string & path)
{
  const json & v = require(obj, key, path);
  if (!v.is_number()) {
    throw ScenarioError(join_path(path, key), "expected a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw ScenarioError(join_path(path, key), "not finite");
  }
  return d;
}

inline double number_or(const json & obj, const std::string & key, const std::string & path, double fallback)
{
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

inline std::string string_of(const json & obj, const std::string & key, const std::string & path)
{
  const json & v = require(obj, key, path);
  if (v.is_number_integer()) {
    return std::to_string(v.get<long long>());
  }
  if (!v.is_string()) {
    throw ScenarioError(join_path(path, key), "expected a string");
  }
  return v.get<std::string>();
}

inline bool commensurate(double value, double step)
{
  const double ratio = value / step;
  return std::abs(ratio - std::round(ratio)) < 1e-9 && std::round(ratio) >= 1.0;
}

inline void check_spacing(double t_prev, double t, double resolution, const std::string & path)
{
  if (std::abs((t - t_prev) - resolution) > 1e-6) {
    throw ScenarioError(path, "frame spacing must equal resolution_s");
  }
}

}  // namespace detail

/// Builds a Scenario from its JSON document, enforcing every invariant.
inline Scenario parse_scenario(const nlohmann::json & doc)
{
  using detail::number;
  using detail::require;
  detail::reject_unknown_keys(
    doc,
    {"id", "resolution_s", "history_horizon_s", "plan_horizon_s", "map", "ego_log", "agents", "instruction",
     "metadata"},
    "");

  Scenario sc;
  sc.id = detail::string_of(doc, "id", "");
  sc.resolution = detail::number_or(doc, "resolution_s", "", 0.5);
  sc.history_horizon = detail::number_or(doc, "history_horizon_s", "", 2.0);
  sc.plan_horizon = detail::number_or(doc, "plan_horizon_s", "", 8.0);
  if (sc.resolution <= 0.0) {
    throw ScenarioError("resolution_s", "must be positive");
  }
  if (!detail::commensurate(sc.plan_horizon, sc.resolution)) {
    throw ScenarioError("plan_horizon_s", "must be a positive integer multiple of resolution_s");
  }
  if (sc.history_horizon < 0.0 ||
      (sc.history_horizon > 0.0 && !detail::commensurate(sc.history_horizon, sc.resolution))) {
    throw ScenarioError("history_horizon_s", "must be a nonnegative integer multiple of resolution_s");
  }

  // map
  const auto & m = require(doc, "map", "");
  detail::reject_unknown_keys(
    m, {"centerline", "lane_half_width_m", "traffic_light", "stop_line_s", "speed_limit_mps"}, "map");
  const auto & cl = require(m, "centerline", "map");
  if (!cl.is_array() || cl.size() < 2) {
    throw ScenarioError("map.centerline", "needs at least two points");
  }
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < cl.size(); ++i) {
    const auto & p = cl[i];
    const std::string path = "map.centerline[" + std::to_string(i) + "]";
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ScenarioError(path, "expected [x, y]");
    }
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
    if (!std::isfinite(pts.back().x) || !std::isfinite(pts.back().y)) {
      throw ScenarioError(path, "not finite");
    }
    if (i > 0 && pts[i] == pts[i - 1]) {
      throw ScenarioError(path, "repeats the previous point");
    }
  }
  sc.map.centerline = Polyline(std::move(pts));
  sc.map.lane_half_width = number(m, "lane_half_width_m", "map");
  if (sc.map.lane_half_width <= 0.0) {
    throw ScenarioError("map.lane_half_width_m", "must be positive");
  }
  const auto light = parse_traffic_light(detail::string_of(m, "traffic_light", "map"));
  if (!light) {
    throw ScenarioError("map.traffic_light", "must be red, yellow, green or none");
  }
  sc.map.traffic_light = *light;
  if (m.contains("stop_line_s") && !m["stop_line_s"].is_null()) {
    sc.map.stop_line_s = number(m, "stop_line_s", "map");
  }
  if (sc.map.traffic_light != TrafficLight::none && !sc.map.stop_line_s) {
    throw ScenarioError("map.stop_line_s", "required when traffic_light is not none");
  }
  if (sc.map.traffic_light == TrafficLight::none && sc.map.stop_line_s) {
    throw ScenarioError("map.stop_line_s", "present without a traffic light");
  }
  if (sc.map.stop_line_s && (*sc.map.stop_line_s < 0.0 || *sc.map.stop_line_s > sc.map.centerline.length())) {
    throw ScenarioError("map.stop_line_s", "outside the centerline arclength range");
  }
  sc.map.speed_limit = number(m, "speed_limit_mps", "map");
  if (sc.map.speed_limit <= 0.0) {
    throw ScenarioError("map.speed_limit_mps", "must be positive");
  }

  // ego log
  const auto & ego = require(doc, "ego_log", "");
  if (!ego.is_array() || ego.empty()) {
    throw ScenarioError("ego_log", "needs at least one frame");
  }
  for (std::size_t i = 0; i < ego.size(); ++i) {
    const std::string path = "ego_log[" + std::to_string(i) + "]";
    detail::reject_unknown_keys(ego[i], {"t", "x", "y", "yaw", "v", "a"}, path);
    EgoSample s{number(ego[i], "t", path), number(ego[i], "x", path), number(ego[i], "y", path),
                wrap_angle(number(ego[i], "yaw", path)), number(ego[i], "v", path),
                detail::number_or(ego[i], "a", path, 0.0)};
    if (s.v < 0.0) {
      throw ScenarioError(path + ".v", "must be nonnegative");
    }
    if (i > 0) {
      detail::check_spacing(sc.ego_log.back().t, s.t, sc.resolution, path + ".t");
    }
    sc.ego_log.push_back(s);
  }

  // agents
  if (doc.contains("agents")) {
    const auto & agents = doc["agents"];
    if (!agents.is_array()) {
      throw ScenarioError("agents", "expected an array");
    }
    std::set<std::string> ids;
    const double t0 = sc.ego_log.front().t;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string path = "agents[" + std::to_string(i) + "]";
      const auto & a = agents[i];
      detail::reject_unknown_keys(a, {"id", "category", "length_m", "width_m", "log"}, path);
      auto track = std::make_shared<AgentTrack>();
      track->id = detail::string_of(a, "id", path);
      if (!ids.insert(track->id).second) {
        throw ScenarioError(path + ".id", "duplicate agent id");
      }
      const auto cat = parse_category(detail::string_of(a, "category", path));
      if (!cat) {
        throw ScenarioError(path + ".category", "must be vehicle, cyclist or pedestrian");
      }
      track->category = *cat;
      track->length = number(a, "length_m", path);
      track->width = number(a, "width_m", path);
      if (track->length <= 0.0 || track->width <= 0.0) {
        throw ScenarioError(path, "footprint dimensions must be positive");
      }
      const auto & log = require(a, "log", path);
      if (!log.is_array() || log.empty()) {
        throw ScenarioError(path + ".log", "needs at least one sample");
      }
      for (std::size_t k = 0; k < log.size(); ++k) {
        const std::string lp = path + ".log[" + std::to_string(k) + "]";
        detail::reject_unknown_keys(log[k], {"t", "x", "y", "yaw", "v"}, lp);
        AgentSample s{number(log[k], "t", lp), number(log[k], "x", lp), number(log[k], "y", lp),
                      wrap_angle(number(log[k], "yaw", lp)), number(log[k], "v", lp)};
        if (k == 0) {
          const double u = (s.t - t0) / sc.resolution;
          if (std::abs(u - std::round(u)) > 1e-6) {
            throw ScenarioError(lp + ".t", "not on the frame grid");
          }
        } else {
          detail::check_spacing(track->log.back().t, s.t, sc.resolution, lp + ".t");
        }
        track->log.push_back(s);
      }
      sc.agents.push_back(std::move(track));
    }
  }

  // instruction
  if (doc.contains("instruction")) {
    const auto & ins = doc["instruction"];
    detail::reject_unknown_keys(ins, {"goal", "free_text"}, "instruction");
    const auto goal = parse_goal(detail::string_of(ins, "goal", "instruction"));
    if (!goal) {
      throw ScenarioError("instruction.goal", "unknown goal");
    }
    sc.instruction.goal = *goal;
    if (ins.contains("free_text") && !ins["free_text"].is_null()) {
      sc.instruction.free_text = detail::string_of(ins, "free_text", "instruction");
    }
  }

  if (doc.contains("metadata")) {
    const auto & md = doc["metadata"];
    if (!md.is_object()) {
      throw ScenarioError("metadata", "expected an object");
    }
    for (const auto & item : md.items()) {
      sc.metadata[item.key()] = item.value().is_string() ? item.value().get<std::string>() : item.value().dump();
    }
  }
  return sc;
}

/// Reads and validates a scenario file.
inline Scenario load_scenario(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError("", "cannot open scenario file " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error & e) {
    throw ScenarioError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

// ---------------------------------------------------------------------------
// Frame transforms
// ---------------------------------------------------------------------------

namespace detail
{

template <typename PoseFn>
PlanningContext map_poses(const PlanningContext & in, PoseFn && fn)
{
  PlanningContext out = in;
  out.ego.pose = fn(in.ego.pose);
  for (auto & p : out.ego.history.poses) {
    p = fn(p);
  }
  for (auto & a : out.observations) {
    a.pose = fn(a.pose);
    for (auto & p : a.predicted.poses) {
      p = fn(p);
    }
  }
  std::vector<Vec2> pts;
  for (const auto & v : in.map.centerline.points()) {
    pts.push_back(fn(Pose{v.x, v.y, 0.0}).position());
  }
  if (!pts.empty()) {
    out.map.centerline = Polyline(std::move(pts));
  }
  return out;
}

}  // namespace detail

/// Re-expresses the context with the ego at the origin facing +x.
inline PlanningContext to_ego_frame(const PlanningContext & context)
{
  const Pose anchor = context.ego.pose;
  PlanningContext out = detail::map_poses(context, [&](const Pose & p) { return to_frame(p, anchor); });
  out.ego.pose = Pose{0.0, 0.0, 0.0};
  out.system.ego_centric = true;
  out.system.frame_origin = anchor;
  return out;
}

/// Maps an ego-frame context back to the world using `anchor` as the ego pose.
inline PlanningContext from_ego_frame(const PlanningContext & context, const Pose & anchor)
{
  PlanningContext out = detail::map_poses(context, [&](const Pose & p) { return from_frame(p, anchor); });
  out.system.ego_centric = false;
  out.system.frame_origin = Pose{};
  return out;
}

inline Trajectory transform_trajectory(const Trajectory & t, const Pose & anchor, bool into_frame)
{
  Trajectory out = t;
  for (auto & p : out.poses) {
    p = into_frame ? to_frame(p, anchor) : from_frame(p, anchor);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Agent selection and resampling
// ---------------------------------------------------------------------------

/// The `cap` agents closest to the ego by center distance, nearest first;
/// equal distances order by ascending id.
inline std::vector<AgentObservation> select_nearest_agents(
  const std::vector<AgentObservation> & agents, const EgoState & ego, std::size_t cap)
{
  std::vector<std::pair<double, const AgentObservation *>> ranked;
  ranked.reserve(agents.size());
  for (const auto & a : agents) {
    ranked.emplace_back(distance(a.pose.position(), ego.pose.position()), &a);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto & l, const auto & r) {
    if (l.first != r.first) return l.first < r.first;
    return l.second->id < r.second->id;
  });
  std::vector<AgentObservation> out;
  const std::size_t n = std::min(cap, ranked.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(*ranked[i].second);
  }
  return out;
}

class ResampleError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Changes the time step by an integer factor. Downsampling keeps every k-th
/// pose; upsampling interpolates (shorter arc for yaw).
inline Trajectory resample_trajectory(const Trajectory & traj, double new_dt)
{
  if (!(new_dt > 0.0) || traj.poses.empty()) {
    throw ResampleError("resample needs new_dt > 0 and a nonempty trajectory");
  }
  const double up = new_dt / traj.dt;
  const double down = traj.dt / new_dt;
  Trajectory out{traj.start_time, new_dt, {}};
  if (std::abs(up - std::round(up)) < 1e-9 && std::round(up) >= 1.0) {
    const auto k = static_cast<std::size_t>(std::round(up));
    for (std::size_t i = 0; i < traj.poses.size(); i += k) {
      out.poses.push_back(traj.poses[i]);
    }
    return out;
  }
  if (std::abs(down - std::round(down)) < 1e-9 && std::round(down) >= 1.0) {
    const auto m = static_cast<std::size_t>(std::round(down));
    for (std::size_t i = 0; i + 1 < traj.poses.size(); ++i) {
      const Pose & a = traj.poses[i];
      const Pose & b = traj.poses[i + 1];
      out.poses.push_back(a);
      for (std::size_t j = 1; j < m; ++j) {
        const double f = static_cast<double>(j) / static_cast<double>(m);
        out.poses.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), interpolate_angle(a.yaw, b.yaw, f)});
      }
    }
    out.poses.push_back(traj.poses.back());
    return out;
  }
  throw ResampleError("new_dt is not commensurate with the trajectory dt");
}

// ---------------------------------------------------------------------------
// Context construction from logs
// ---------------------------------------------------------------------------

/// Observation of a logged agent at time t, with its logged future over the
/// horizon as prediction (prefix only when the log ends early).
inline AgentObservation observe_logged_agent(
  const std::shared_ptr<const AgentTrack> & track, double t, double horizon, double resolution)
{
  const AgentSample now = track->sample(t);
  AgentObservation obs;
  obs.id = track->id;
  obs.category = track->category;
  obs.pose = {now.x, now.y, now.yaw};
  obs.velocity = now.v;
  obs.length = track->length;
  obs.width = track->width;
  obs.track = track;
  obs.predicted = {t, resolution, {}};
  const auto steps = static_cast<std::size_t>(std::llround(horizon / resolution));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tk = t + resolution * static_cast<double>(k);
    if (!track->covers(tk)) break;
    const AgentSample s = track->sample(tk);
    obs.predicted.poses.push_back({s.x, s.y, s.yaw});
  }
  if (obs.predicted.poses.empty()) {
    obs.predicted.poses.push_back(obs.pose);
  }
  return obs;
}

/// Logged ego history ending at t (inclusive), at the scenario resolution.
inline Trajectory ego_history(const Scenario & sc, double t)
{
  const std::size_t steps = sc.history_steps();
  const double start = t - sc.resolution * static_cast<double>(steps);
  Trajectory h{start, sc.resolution, {}};
  for (std::size_t k = 0; k <= steps; ++k) {
    h.poses.push_back(sc.ego_at(start + sc.resolution * static_cast<double>(k)).pose());
  }
  return h;
}

/// World-frame context at a logged frame, before agent selection.
inline PlanningContext context_at_frame(const Scenario & sc, std::size_t frame, const EgoGeometry & geom)
{
  const EgoSample & e = sc.ego_log.at(frame);
  PlanningContext ctx;
  ctx.timestamp = e.t;
  ctx.plan_horizon = sc.plan_horizon;
  ctx.resolution = sc.resolution;
  ctx.map = sc.map;
  ctx.instruction = sc.instruction;
  ctx.ego.pose = e.pose();
  ctx.ego.velocity = e.v;
  ctx.ego.acceleration = e.a;
  ctx.ego.length = geom.length;
  ctx.ego.width = geom.width;
  ctx.ego.history = ego_history(sc, e.t);
  ctx.system = {false, true, Pose{}, geom.length, geom.width, geom.wheelbase};
  for (const auto & track : sc.agents) {
    if (track->covers(e.t)) {
      ctx.observations.push_back(observe_logged_agent(track, e.t, sc.plan_horizon, sc.resolution));
    }
  }
  return ctx;
}

/// Logged ego motion from frame over the plan horizon (world frame).
inline Trajectory logged_future(const Scenario & sc, std::size_t frame)
{
  Trajectory t{sc.frame_time(frame), sc.resolution, {}};
  for (std::size_t k = 0; k <= sc.plan_steps() && frame + k < sc.frame_count(); ++k) {
    t.poses.push_back(sc.ego_log[frame + k].pose());
  }
  return t;
}

}  // namespace chainplan

#endif  // CHAINPLAN__SCENARIO_HPP_
