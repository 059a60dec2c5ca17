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

#ifndef CHAINPLAN__CHAIN_PLANNER_HPP_
#define CHAINPLAN__CHAIN_PLANNER_HPP_

#include "chainplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

// Rule-based four-stage reasoning planner: preliminary maneuver, collision
// prediction, traffic assessment and final action, followed by trajectory
// generation along the lane corridor.

namespace chainplan
{

enum class ManeuverIntent { keep_lane, lane_change_left, lane_change_right, turn_left, turn_right, stop, yield };
enum class HazardLevel { none, hazard, critical };
enum class LightAction { full_stop, caution, proceed, none };

inline std::string_view to_string(ManeuverIntent i)
{
  switch (i) {
    case ManeuverIntent::keep_lane: return "keep_lane";
    case ManeuverIntent::lane_change_left: return "lane_change_left";
    case ManeuverIntent::lane_change_right: return "lane_change_right";
    case ManeuverIntent::turn_left: return "turn_left";
    case ManeuverIntent::turn_right: return "turn_right";
    case ManeuverIntent::stop: return "stop";
    case ManeuverIntent::yield: return "yield";
  }
  return "keep_lane";
}

inline std::string_view to_string(HazardLevel l)
{
  switch (l) {
    case HazardLevel::none: return "none";
    case HazardLevel::hazard: return "hazard";
    case HazardLevel::critical: return "critical";
  }
  return "none";
}

inline std::string_view to_string(LightAction a)
{
  switch (a) {
    case LightAction::full_stop: return "full_stop";
    case LightAction::caution: return "caution";
    case LightAction::proceed: return "proceed";
    case LightAction::none: return "none";
  }
  return "none";
}

struct ChainConfig
{
  double critical_distance{1.5};
  double hazard_distance{3.0};
  /// Clearance between footprints when true, center distance otherwise.
  bool footprint_clearance{true};
  double hazard_slowdown{0.5};
  double caution_slowdown{0.8};
  double suppress_accel_ratio{0.95};
  double turn_curvature{0.1};
  double lane_change_duration{4.0};
  double accel{1.5};
  double comfort_decel{2.5};
  double emergency_decel{4.0};
  /// Front bumper stops this far before the stop line.
  double stop_margin{1.0};
};

struct HazardAssessment
{
  std::string agent_id;
  double min_distance{0.0};
  double time_of_min{0.0};
  HazardLevel level{HazardLevel::none};
  /// Prediction ended before the horizon; only its prefix was assessed.
  bool truncated{false};
};

struct TrafficAssessment
{
  LightAction light_action{LightAction::none};
  double speed_cap{0.0};
  bool accel_suppressed{false};
  bool lane_violation{false};
  std::optional<double> stop_line_s;
};

struct FinalAction
{
  ManeuverIntent intent{ManeuverIntent::keep_lane};
  double target_speed{0.0};
  std::optional<double> stop_at_s;
  bool emergency{false};
};

struct ReasoningTrace
{
  ManeuverIntent preliminary{ManeuverIntent::keep_lane};
  std::vector<HazardAssessment> hazards;
  TrafficAssessment traffic;
  FinalAction final_action;
  std::vector<std::string> narrative;

  bool has_critical() const
  {
    return std::any_of(hazards.begin(), hazards.end(), [](const auto & h) { return h.level == HazardLevel::critical; });
  }
};

struct ChainPlan
{
  ReasoningTrace trace;
  Trajectory trajectory;
};

inline HazardLevel classify_clearance(double d, const ChainConfig & cfg = {})
{
  if (d <= cfg.critical_distance) return HazardLevel::critical;
  if (d <= cfg.hazard_distance) return HazardLevel::hazard;
  return HazardLevel::none;
}

namespace detail
{

inline std::string fmt3(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline double lookahead_distance(const PlanningContext & ctx)
{
  return std::max({ctx.ego.velocity, ctx.map.speed_limit, 1.0}) * ctx.plan_horizon;
}

inline double max_signed_curvature_ahead(const PlanningContext & ctx)
{
  const Projection ego = ctx.map.centerline.project(ctx.ego.pose.position());
  const double end = ego.s + lookahead_distance(ctx);
  double best = 0.0;
  for (const auto & [s, k] : ctx.map.centerline.vertex_curvatures()) {
    if (s < ego.s || s > end) continue;
    if (std::abs(k) > std::abs(best)) best = k;
  }
  return best;
}

inline Vec2 left_normal(double heading) { return {-std::sin(heading), std::cos(heading)}; }

}  // namespace detail

/// Stage 1: high-level maneuver from the instruction and lane geometry.
inline ManeuverIntent preliminary_plan(const PlanningContext & ctx, const ChainConfig & cfg = {})
{
  switch (ctx.instruction.goal) {
    case Goal::turn_left: return ManeuverIntent::turn_left;
    case Goal::turn_right: return ManeuverIntent::turn_right;
    case Goal::lane_change_left: return ManeuverIntent::lane_change_left;
    case Goal::lane_change_right: return ManeuverIntent::lane_change_right;
    case Goal::yield: return ManeuverIntent::yield;
    case Goal::stop: return ManeuverIntent::stop;
    case Goal::follow_lane: break;
  }
  const double k = detail::max_signed_curvature_ahead(ctx);
  if (std::abs(k) > cfg.turn_curvature) {
    return k > 0.0 ? ManeuverIntent::turn_left : ManeuverIntent::turn_right;
  }
  return ManeuverIntent::keep_lane;
}

/// Ego pose after travelling `ds` along the corridor at its current offset.
inline Pose keep_lane_rollout_pose(const PlanningContext & ctx, double ds)
{
  if (ds == 0.0) {
    return ctx.ego.pose;
  }
  const Projection p = ctx.map.centerline.project(ctx.ego.pose.position());
  const PathPoint a = ctx.map.centerline.at(p.s);
  const PathPoint b = ctx.map.centerline.at(p.s + ds);
  const Vec2 offset_a = p.lateral * detail::left_normal(a.heading);
  const Vec2 offset_b = p.lateral * detail::left_normal(b.heading);
  const Vec2 pos = ctx.ego.pose.position() + (b.position + offset_b) - (a.position + offset_a);
  return {pos.x, pos.y, wrap_angle(b.heading)};
}

/// Stage 2: closest approach of each agent's prediction to the ego's
/// constant-speed keep-lane rollout, nearest first.
inline std::vector<HazardAssessment> predict_collisions(
  const PlanningContext & ctx, double horizon, const ChainConfig & cfg = {})
{
  std::vector<HazardAssessment> out;
  const double dt = ctx.resolution;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  std::vector<Pose> rollout;
  for (std::size_t k = 0; k <= steps; ++k) {
    rollout.push_back(keep_lane_rollout_pose(ctx, ctx.ego.velocity * dt * static_cast<double>(k)));
  }
  for (const auto & a : ctx.observations) {
    HazardAssessment h;
    h.agent_id = a.id;
    h.min_distance = std::numeric_limits<double>::infinity();
    const Trajectory & pred = a.predicted;
    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = ctx.timestamp + dt * static_cast<double>(k);
      Pose agent_pose;
      if (pred.empty()) {
        if (k > 0) {
          h.truncated = true;
          break;
        }
        agent_pose = a.pose;
      } else {
        if (t < pred.start_time - 1e-9 || t > pred.end_time() + 1e-9) {
          h.truncated = true;
          break;
        }
        agent_pose = pred.sample(t);
      }
      const OrientedBox ego_box{rollout[k].position(), rollout[k].yaw, ctx.ego.length, ctx.ego.width};
      const OrientedBox agent_box{agent_pose.position(), agent_pose.yaw, a.length, a.width};
      const double d = cfg.footprint_clearance ? box_distance(ego_box, agent_box)
                                               : distance(ego_box.center, agent_box.center);
      if (d < h.min_distance) {
        h.min_distance = d;
        h.time_of_min = dt * static_cast<double>(k);
      }
    }
    if (!std::isfinite(h.min_distance)) {
      // no overlap in time at all; assess the current pose
      const double d = cfg.footprint_clearance ? box_distance(ctx.ego.footprint(), a.footprint())
                                               : distance(ctx.ego.pose.position(), a.pose.position());
      h.min_distance = d;
      h.time_of_min = 0.0;
    }
    // nanometre grid: polygon rounding noise must not push a clearance
    // across a threshold
    h.min_distance = std::round(h.min_distance * 1e9) / 1e9;
    h.level = classify_clearance(h.min_distance, cfg);
    out.push_back(std::move(h));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto & l, const auto & r) {
    if (l.min_distance != r.min_distance) return l.min_distance < r.min_distance;
    return l.agent_id < r.agent_id;
  });
  return out;
}

/// Stage 3: traffic light, speed limit and lane boundary constraints.
inline TrafficAssessment assess_traffic(const PlanningContext & ctx, const ChainConfig & cfg = {})
{
  TrafficAssessment t;
  switch (ctx.map.traffic_light) {
    case TrafficLight::red: t.light_action = LightAction::full_stop; break;
    case TrafficLight::yellow: t.light_action = LightAction::caution; break;
    case TrafficLight::green: t.light_action = LightAction::proceed; break;
    case TrafficLight::none: t.light_action = LightAction::none; break;
  }
  if (ctx.map.traffic_light != TrafficLight::none) {
    t.stop_line_s = ctx.map.stop_line_s;
  }
  t.speed_cap = ctx.map.speed_limit;
  t.accel_suppressed = ctx.ego.velocity >= cfg.suppress_accel_ratio * ctx.map.speed_limit;
  for (const auto & c : ctx.ego.footprint().corners()) {
    if (std::abs(ctx.map.centerline.project(c).lateral) > ctx.map.lane_half_width) {
      t.lane_violation = true;
    }
  }
  return t;
}

/// Stage 4: strict priority critical > red light > requested stop > hazard
/// or yield slowdown > caution > nominal.
inline FinalAction integrate_action(
  ManeuverIntent intent, const std::vector<HazardAssessment> & hazards, const TrafficAssessment & traffic,
  const ChainConfig & cfg = {})
{
  const bool critical = std::any_of(hazards.begin(), hazards.end(), [](const auto & h) { return h.level == HazardLevel::critical; });
  const bool hazard = std::any_of(hazards.begin(), hazards.end(), [](const auto & h) { return h.level == HazardLevel::hazard; });
  const double cap = traffic.speed_cap;
  if (critical) {
    return {ManeuverIntent::stop, 0.0, std::nullopt, true};
  }
  if (traffic.light_action == LightAction::full_stop) {
    return {ManeuverIntent::stop, 0.0, traffic.stop_line_s, false};
  }
  if (intent == ManeuverIntent::stop) {
    return {ManeuverIntent::stop, 0.0, std::nullopt, false};
  }
  if (hazard || intent == ManeuverIntent::yield) {
    return {intent, cfg.hazard_slowdown * cap, std::nullopt, false};
  }
  if (traffic.light_action == LightAction::caution) {
    return {intent, cfg.caution_slowdown * cap, std::nullopt, false};
  }
  return {intent, cap, std::nullopt, false};
}

namespace detail
{

inline double quintic_blend(double x)
{
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

/// Longitudinal profile: distance travelled at each multiple of dt.
inline std::vector<double> speed_profile(
  const FinalAction & action, double v0, double speed_cap, std::optional<double> stop_distance, std::size_t steps,
  double dt, const ChainConfig & cfg)
{
  constexpr int kSub = 20;
  const double h = dt / kSub;
  std::vector<double> out{0.0};
  double pos = 0.0;
  double v = v0;
  const bool stopping = action.intent == ManeuverIntent::stop;
  const bool behind = stop_distance && *stop_distance <= 0.0;
  const double cruise = std::min(action.target_speed, speed_cap);
  for (std::size_t k = 0; k < steps; ++k) {
    for (int j = 0; j < kSub; ++j) {
      double a = 0.0;
      if (stopping && (action.emergency || behind)) {
        a = -cfg.emergency_decel;
      } else if (stopping && stop_distance) {
        const double remaining = *stop_distance - pos;
        const double needed = remaining > 1e-9 ? v * v / (2.0 * remaining) : cfg.emergency_decel;
        if (v > 0.0 && (needed >= cfg.comfort_decel || v * v / (2.0 * cfg.comfort_decel) >= remaining - v * h)) {
          a = -std::min(needed, cfg.emergency_decel);
        } else {
          a = 0.0;  // hold speed until the braking point
        }
      } else if (stopping) {
        a = -cfg.comfort_decel;
      } else if (v < cruise) {
        a = std::min(cfg.accel, (cruise - v) / h);
      } else if (v > cruise) {
        a = -std::min(cfg.comfort_decel, (v - cruise) / h);
      }
      if (v + a * h < 0.0) {
        pos += a < 0.0 ? -v * v / (2.0 * a) : 0.0;
        v = 0.0;
      } else {
        pos += v * h + 0.5 * a * h * h;
        v += a * h;
      }
    }
    out.push_back(pos);
  }
  return out;
}

}  // namespace detail

/// Poses at the given travelled distances (one per dt) along the corridor, starting at
/// the ego pose and blending the lateral offset toward `target_offset` with a
/// quintic profile over `blend_length` meters. Positions are placed by true
/// path arclength.
inline Trajectory trajectory_along_corridor(
  const PlanningContext & ctx, const std::vector<double> & travel, double dt, double target_offset,
  double blend_length)
{
  const Polyline & lane = ctx.map.centerline;
  const Projection ego = lane.project(ctx.ego.pose.position());
  constexpr double kSpacing = 0.5;
  const double path_length = (travel.empty() ? 0.0 : travel.back()) + 20.0;
  std::vector<Vec2> pts{ctx.ego.pose.position()};
  for (double sigma = kSpacing; sigma <= path_length + kSpacing; sigma += kSpacing) {
    const PathPoint c = lane.at(ego.s + sigma);
    const double d = ego.lateral + (target_offset - ego.lateral) * detail::quintic_blend(sigma / blend_length);
    const Vec2 p = c.position + d * detail::left_normal(c.heading);
    if (!(distance(p, pts.back()) > 1e-6)) continue;
    pts.push_back(p);
  }
  const Polyline path(std::move(pts));

  Trajectory out{ctx.timestamp, dt, {}};
  out.poses.reserve(travel.size());
  for (const double dist : travel) {
    if (dist == 0.0) {
      out.poses.push_back(ctx.ego.pose);
      continue;
    }
    const PathPoint p = path.at(dist);
    out.poses.push_back({p.position.x, p.position.y, wrap_angle(p.heading)});
  }
  return out;
}

/// Maps the final action to a pose sequence of horizon/dt + 1 poses.
inline Trajectory generate_trajectory(
  const FinalAction & action, const PlanningContext & ctx, double horizon, double dt, const ChainConfig & cfg = {})
{
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  const Polyline & lane = ctx.map.centerline;
  const Projection ego = lane.project(ctx.ego.pose.position());
  const double v0 = ctx.ego.velocity;

  double target_offset = 0.0;
  if (action.intent == ManeuverIntent::lane_change_left) target_offset = 2.0 * ctx.map.lane_half_width;
  if (action.intent == ManeuverIntent::lane_change_right) target_offset = -2.0 * ctx.map.lane_half_width;
  const double blend_length = std::max(v0, 2.0) * cfg.lane_change_duration;

  std::optional<double> stop_distance;
  if (action.stop_at_s) {
    stop_distance = (*action.stop_at_s - ego.s) - 0.5 * ctx.ego.length - cfg.stop_margin;
  }
  const std::vector<double> travel =
    detail::speed_profile(action, v0, ctx.map.speed_limit, stop_distance, steps, dt, cfg);

  return trajectory_along_corridor(ctx, travel, dt, target_offset, blend_length);
}

/// Narrative line for one stage: `STAGE <n> <name>: <content>`.
inline std::string stage_line(int n, std::string_view name, const std::string & content)
{
  return "STAGE " + std::to_string(n) + " " + std::string(name) + ": " + content;
}

/// Runs the four stages and trajectory generation. Pure.
inline ChainPlan chain_plan(const PlanningContext & ctx, const ChainConfig & cfg = {})
{
  using detail::fmt3;
  ChainPlan out;
  ReasoningTrace & tr = out.trace;
  tr.preliminary = preliminary_plan(ctx, cfg);
  tr.hazards = predict_collisions(ctx, ctx.plan_horizon, cfg);
  tr.traffic = assess_traffic(ctx, cfg);
  tr.final_action = integrate_action(tr.preliminary, tr.hazards, tr.traffic, cfg);

  tr.narrative.push_back(stage_line(
    1, "Preliminary",
    "goal=" + std::string(to_string(ctx.instruction.goal)) + " intent=" + std::string(to_string(tr.preliminary)) +
      " curvature_ahead=" + fmt3(detail::max_signed_curvature_ahead(ctx))));

  std::string collision = "agents=" + std::to_string(ctx.observations.size());
  for (const auto & h : tr.hazards) {
    if (h.level == HazardLevel::none) continue;
    collision += " " + h.agent_id + ":" + std::string(to_string(h.level)) + "@" + fmt3(h.min_distance) + "m/t=" +
                 fmt3(h.time_of_min) + (h.truncated ? "(partial)" : "");
  }
  tr.narrative.push_back(stage_line(2, "Collision", collision));

  std::string traffic = "light=" + std::string(to_string(ctx.map.traffic_light)) +
                        " action=" + std::string(to_string(tr.traffic.light_action)) +
                        " speed_cap=" + fmt3(tr.traffic.speed_cap) +
                        " accel_suppressed=" + (tr.traffic.accel_suppressed ? "true" : "false") +
                        " lane_violation=" + (tr.traffic.lane_violation ? "true" : "false");
  if (tr.traffic.stop_line_s) traffic += " stop_line_s=" + fmt3(*tr.traffic.stop_line_s);
  tr.narrative.push_back(stage_line(3, "Traffic", traffic));

  std::string fin = "intent=" + std::string(to_string(tr.final_action.intent)) +
                    " target_speed=" + fmt3(tr.final_action.target_speed);
  if (tr.final_action.stop_at_s) fin += " stop_at_s=" + fmt3(*tr.final_action.stop_at_s);
  if (tr.final_action.emergency) fin += " emergency=true";
  tr.narrative.push_back(stage_line(4, "Final", fin));

  out.trajectory = generate_trajectory(tr.final_action, ctx, ctx.plan_horizon, ctx.resolution, cfg);
  return out;
}

}  // namespace chainplan

#endif  // CHAINPLAN__CHAIN_PLANNER_HPP_
