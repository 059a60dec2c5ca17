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

#ifndef CHAINPLAN__SIMULATION_HPP_
#define CHAINPLAN__SIMULATION_HPP_

#include "chainplan/background.hpp"
#include "chainplan/dynamics.hpp"
#include "chainplan/planner.hpp"
#include "chainplan/scenario.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainplan
{

enum class SimulationMode { open_loop, closed_nonreactive, closed_reactive };

inline std::string_view to_string(SimulationMode m)
{
  switch (m) {
    case SimulationMode::open_loop: return "open_loop";
    case SimulationMode::closed_nonreactive: return "closed_nonreactive";
    case SimulationMode::closed_reactive: return "closed_reactive";
  }
  return "open_loop";
}

inline std::optional<SimulationMode> parse_mode(std::string_view s)
{
  for (auto m : {SimulationMode::open_loop, SimulationMode::closed_nonreactive, SimulationMode::closed_reactive}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct SimulationConfig
{
  SimulationMode mode{SimulationMode::closed_nonreactive};
  double replan_interval{0.5};
  double substep{0.1};
  /// Defaults to the remainder of the scenario after the history window.
  std::optional<double> duration;
  std::size_t agent_cap{32};
  EgoGeometry geometry;
  ControlLimits limits;
  LqrConfig lqr;
  IdmParams idm;
  /// Reactive agents take the map speed limit as desired speed.
  bool idm_speed_from_limit{true};
  /// Deceleration applied while the planner is failing.
  double fallback_decel{2.5};

  std::size_t replan_every() const
  {
    const double r = replan_interval / substep;
    if (!(substep > 0.0) || std::abs(r - std::round(r)) > 1e-9 || std::round(r) < 1.0) {
      throw std::invalid_argument("replan_interval must be a positive integer multiple of substep");
    }
    return static_cast<std::size_t>(std::round(r));
  }
};

struct Tick
{
  double t{0.0};
  VehicleState ego;
  /// Realized longitudinal acceleration over the step leaving this tick.
  double acceleration{0.0};
  Control control;
  std::vector<AgentObservation> agents;
  std::shared_ptr<const Trajectory> active_plan;
  std::optional<ReasoningTrace> trace;
  std::string trace_text;
  std::size_t planner_failures{0};
  bool replanned{false};
  std::vector<std::string> replay_fallbacks;
};

struct SimulationLog
{
  std::string scenario_id;
  std::string planner;
  SimulationConfig config;
  std::vector<Tick> ticks;
};

// ---------------------------------------------------------------------------
// Open loop
// ---------------------------------------------------------------------------

struct OpenLoopFrame
{
  double t{0.0};
  /// Ego-frame prediction; empty when the planner failed.
  std::optional<Trajectory> predicted;
  /// Ego-frame logged future.
  Trajectory truth;
  Pose anchor;
  std::optional<ReasoningTrace> trace;
  std::string failure;
};

struct OpenLoopResult
{
  std::string scenario_id;
  std::vector<OpenLoopFrame> frames;
};

/// Planning context at a logged frame: nearest agents, ego-centric.
inline PlanningContext planner_context_at_frame(const Scenario & sc, std::size_t frame, const SimulationConfig & cfg)
{
  PlanningContext world = context_at_frame(sc, frame, cfg.geometry);
  world.observations = select_nearest_agents(world.observations, world.ego, cfg.agent_cap);
  return to_ego_frame(world);
}

/// Plans at every frame with full history and horizon; the ego follows
/// its log regardless of the predictions.
inline OpenLoopResult run_open_loop(const Scenario & sc, Planner & planner, const SimulationConfig & cfg = {})
{
  OpenLoopResult out;
  out.scenario_id = sc.id;
  const std::size_t h = sc.history_steps();
  const std::size_t f = sc.plan_steps();
  for (std::size_t i = h; i + f < sc.frame_count(); ++i) {
    const PlanningContext ctx = planner_context_at_frame(sc, i, cfg);
    OpenLoopFrame frame;
    frame.t = sc.frame_time(i);
    frame.anchor = sc.ego_log[i].pose();
    frame.truth = transform_trajectory(logged_future(sc, i), frame.anchor, true);
    PlanResult r;
    try {
      r = planner.plan(ctx);
    } catch (const std::exception & e) {
      r = PlanResult::failed(std::string("planner error: ") + e.what());
    }
    if (r.ok() && r.trajectory->size() != frame.truth.size()) {
      r = PlanResult::failed("wrong_length: expected " + std::to_string(frame.truth.size()) + " poses");
    }
    frame.predicted = std::move(r.trajectory);
    frame.trace = std::move(r.trace);
    frame.failure = std::move(r.failure);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed loop
// ---------------------------------------------------------------------------

/// Mutable world state carried between substeps.
struct SimState
{
  double t{0.0};
  VehicleState ego;
  double ego_acceleration{0.0};
  std::vector<AgentObservation> agents;
  std::shared_ptr<const Trajectory> plan;
  std::vector<TrackingGain> gains;
  bool fallback{false};
};

struct SubstepResult
{
  Control control;
  SimState next;
  std::vector<std::string> replay_fallbacks;
};

inline AgentMode agent_mode(SimulationMode m)
{
  return m == SimulationMode::closed_reactive ? AgentMode::reactive_idm : AgentMode::log_replay;
}

inline IdmParams effective_idm(const SimulationConfig & cfg, const MapContext & map)
{
  IdmParams p = cfg.idm;
  if (cfg.idm_speed_from_limit) {
    p.desired_speed = map.speed_limit;
  }
  return p;
}

/// One substep: track the active plan, integrate the ego, move the agents.
inline SubstepResult step_simulation(const SimState & s, const MapContext & map, const SimulationConfig & cfg)
{
  Control u;
  if (s.plan && !s.fallback) {
    u = track_trajectory(s.ego, *s.plan, s.gains, s.t, cfg.limits);
  } else {
    if (s.plan && !s.gains.empty()) {
      u.steering_angle = track_trajectory(s.ego, *s.plan, s.gains, s.t, cfg.limits).steering_angle;
    }
    u.acceleration = s.ego.velocity > 0.0 ? -cfg.fallback_decel : 0.0;
    u = cfg.limits.clamp(u);
  }
  SubstepResult r;
  r.control = u;
  r.next = s;
  r.next.t = s.t + cfg.substep;
  r.next.ego = kinematic_step(s.ego, u, cfg.substep);
  r.next.ego_acceleration = (r.next.ego.velocity - s.ego.velocity) / cfg.substep;

  EgoState ego;
  ego.pose = s.ego.pose;
  ego.velocity = s.ego.velocity;
  ego.length = cfg.geometry.length;
  ego.width = cfg.geometry.width;
  BackgroundStep bg = step_background(s.agents, agent_mode(cfg.mode), ego, map, s.t, cfg.substep, effective_idm(cfg, map));
  r.next.agents = std::move(bg.agents);
  r.replay_fallbacks = std::move(bg.replay_fallbacks);
  return r;
}

namespace detail
{

inline bool idm_controlled(const AgentObservation & a, const MapContext & map)
{
  if (a.category != AgentCategory::vehicle) return false;
  const Projection p = map.centerline.project(a.pose.position());
  return std::abs(p.lateral) <= map.lane_half_width && std::abs(wrap_angle(a.pose.yaw - p.heading)) < 0.5 * kPi;
}

inline Trajectory constant_velocity_prediction(const AgentObservation & a, double t, double horizon, double dt)
{
  Trajectory out{t, dt, {}};
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tau = dt * static_cast<double>(k);
    out.poses.push_back(
      {a.pose.x + a.velocity * std::cos(a.pose.yaw) * tau, a.pose.y + a.velocity * std::sin(a.pose.yaw) * tau, a.pose.yaw});
  }
  return out;
}

}  // namespace detail

/// Simulated-world context: simulated ego and agents; predictions are log
/// futures, or constant-velocity extrapolation for IDM-driven vehicles.
inline PlanningContext closed_loop_context(
  const Scenario & sc, const SimState & s, const std::vector<Tick> & past, double t_start, const SimulationConfig & cfg)
{
  PlanningContext ctx;
  ctx.timestamp = s.t;
  ctx.plan_horizon = sc.plan_horizon;
  ctx.resolution = sc.resolution;
  ctx.map = sc.map;
  ctx.instruction = sc.instruction;
  ctx.ego.pose = s.ego.pose;
  ctx.ego.velocity = s.ego.velocity;
  ctx.ego.acceleration = s.ego_acceleration;
  ctx.ego.length = cfg.geometry.length;
  ctx.ego.width = cfg.geometry.width;
  ctx.system = {false, true, Pose{}, cfg.geometry.length, cfg.geometry.width, cfg.geometry.wheelbase};

  const std::size_t hsteps = sc.history_steps();
  const double h0 = s.t - sc.resolution * static_cast<double>(hsteps);
  ctx.ego.history = {h0, sc.resolution, {}};
  for (std::size_t k = 0; k <= hsteps; ++k) {
    const double tk = h0 + sc.resolution * static_cast<double>(k);
    if (k == hsteps) {
      ctx.ego.history.poses.push_back(s.ego.pose);
    } else if (tk < t_start - 1e-9 || past.empty()) {
      ctx.ego.history.poses.push_back(sc.ego_at(tk).pose());
    } else {
      const auto idx = static_cast<std::size_t>(std::llround((tk - t_start) / cfg.substep));
      ctx.ego.history.poses.push_back(past[std::min(idx, past.size() - 1)].ego.pose);
    }
  }

  for (const auto & a : s.agents) {
    AgentObservation obs = a;
    const bool reactive = cfg.mode == SimulationMode::closed_reactive && detail::idm_controlled(a, sc.map);
    if (reactive || !a.track) {
      obs.predicted = detail::constant_velocity_prediction(a, s.t, sc.plan_horizon, sc.resolution);
    } else {
      obs.predicted = observe_logged_agent(a.track, s.t, sc.plan_horizon, sc.resolution).predicted;
    }
    ctx.observations.push_back(std::move(obs));
  }
  return ctx;
}

/// Replans every replan_interval, tracks the plan with LQR at every substep,
/// and propagates background agents per the mode.
inline SimulationLog run_closed_loop(const Scenario & sc, Planner & planner, const SimulationConfig & cfg)
{
  if (cfg.mode == SimulationMode::open_loop) {
    throw std::invalid_argument("run_closed_loop needs a closed-loop mode");
  }
  const std::size_t every = cfg.replan_every();
  const std::size_t start_frame = std::min(sc.history_steps(), sc.frame_count() - 1);
  const double t_start = sc.frame_time(start_frame);
  const double duration = cfg.duration.value_or(sc.ego_log.back().t - t_start);
  const auto n = static_cast<std::size_t>(std::llround(duration / cfg.substep));

  SimulationLog log;
  log.scenario_id = sc.id;
  log.planner = std::string(planner.name());
  log.config = cfg;
  log.ticks.reserve(n + 1);

  SimState s;
  s.t = t_start;
  s.ego = {sc.ego_log[start_frame].pose(), sc.ego_log[start_frame].v, cfg.geometry.wheelbase};
  s.ego_acceleration = sc.ego_log[start_frame].a;
  for (const auto & track : sc.agents) {
    if (track->covers(t_start)) {
      s.agents.push_back(observe_logged_agent(track, t_start, 0.0, sc.resolution));
      s.agents.back().predicted = {};
    }
  }

  std::size_t failures = 0;
  std::optional<ReasoningTrace> trace;
  std::string trace_text;
  for (std::size_t k = 0; k <= n; ++k) {
    s.t = t_start + cfg.substep * static_cast<double>(k);
    Tick tick;
    tick.t = s.t;

    // agents enter and leave with their logs; IDM-driven ones persist
    if (k > 0) {
      std::vector<AgentObservation> alive;
      for (auto & a : s.agents) {
        const bool reactive = cfg.mode == SimulationMode::closed_reactive && detail::idm_controlled(a, sc.map);
        if (!a.track || reactive || a.track->covers(s.t)) alive.push_back(std::move(a));
      }
      for (const auto & track : sc.agents) {
        const bool present = std::any_of(alive.begin(), alive.end(), [&](const auto & a) { return a.id == track->id; });
        if (!present && track->covers(s.t) && !track->covers(s.t - cfg.substep)) {
          alive.push_back(observe_logged_agent(track, s.t, 0.0, sc.resolution));
          alive.back().predicted = {};
        }
      }
      s.agents = std::move(alive);
    }

    if (k % every == 0 && k < n) {
      PlanningContext world = closed_loop_context(sc, s, log.ticks, t_start, cfg);
      world.observations = select_nearest_agents(world.observations, world.ego, cfg.agent_cap);
      const PlanningContext ctx = to_ego_frame(world);
      PlanResult r;
      try {
        r = planner.plan(ctx);
      } catch (const std::exception & e) {
        r = PlanResult::failed(std::string("planner error: ") + e.what());
      }
      if (r.ok() && r.trajectory->size() != ctx.plan_steps() + 1) {
        r = PlanResult::failed("wrong_length");
      }
      if (r.ok()) {
        Trajectory plan_world = transform_trajectory(*r.trajectory, s.ego.pose, false);
        plan_world.start_time = s.t;
        s.plan = std::make_shared<const Trajectory>(std::move(plan_world));
        LqrConfig lqr = cfg.lqr;
        lqr.dt = cfg.substep;
        lqr.wheelbase = cfg.geometry.wheelbase;
        lqr.reference_speed = std::max(1.0, reference_at(*s.plan, s.t).speed);
        s.gains = solve_lqr_gains(lqr);
        s.fallback = false;
        trace = std::move(r.trace);
        trace_text = std::move(r.trace_text);
      } else {
        ++failures;
        s.fallback = true;
      }
      tick.replanned = true;
    }

    tick.ego = s.ego;
    tick.agents = s.agents;
    tick.active_plan = s.plan;
    tick.trace = trace;
    if (tick.replanned) tick.trace_text = trace_text;
    tick.planner_failures = failures;
    if (k < n) {
      SubstepResult step = step_simulation(s, sc.map, cfg);
      tick.control = step.control;
      tick.acceleration = step.next.ego_acceleration;
      tick.replay_fallbacks = std::move(step.replay_fallbacks);
      s = std::move(step.next);
    }
    log.ticks.push_back(std::move(tick));
  }
  return log;
}

/// Open-loop frames as a log: logged ego per frame, prediction as plan.
inline SimulationLog open_loop_as_log(const Scenario & sc, const OpenLoopResult & r, std::string planner_name)
{
  SimulationLog log;
  log.scenario_id = sc.id;
  log.planner = std::move(planner_name);
  log.config.mode = SimulationMode::open_loop;
  log.config.substep = sc.resolution;
  log.config.replan_interval = sc.resolution;
  std::size_t failures = 0;
  for (const auto & f : r.frames) {
    Tick tick;
    tick.t = f.t;
    const EgoSample e = sc.ego_at(f.t);
    tick.ego = {e.pose(), e.v, log.config.geometry.wheelbase};
    tick.acceleration = e.a;
    for (const auto & track : sc.agents) {
      if (track->covers(f.t)) {
        tick.agents.push_back(observe_logged_agent(track, f.t, 0.0, sc.resolution));
        tick.agents.back().predicted = {};
      }
    }
    if (f.predicted) {
      tick.active_plan = std::make_shared<const Trajectory>(transform_trajectory(*f.predicted, f.anchor, false));
    } else {
      ++failures;
    }
    tick.trace = f.trace;
    tick.planner_failures = failures;
    tick.replanned = true;
    log.ticks.push_back(std::move(tick));
  }
  return log;
}

}  // namespace chainplan

#endif  // CHAINPLAN__SIMULATION_HPP_
