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

#ifndef CHAINPLAN__BACKGROUND_HPP_
#define CHAINPLAN__BACKGROUND_HPP_

#include "chainplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace chainplan
{

/// Intelligent Driver Model parameters (Treiber's published defaults).
struct IdmParams
{
  double desired_speed{13.9};
  double time_headway{1.5};
  double min_gap{2.0};
  double max_accel{1.4};
  double comfort_decel{2.0};
  double exponent{4.0};
  /// Hard floor on the returned acceleration, as a positive magnitude.
  double max_decel{9.0};

  void validate() const
  {
    if (!(desired_speed > 0.0 && time_headway > 0.0 && min_gap > 0.0 && max_accel > 0.0 && comfort_decel > 0.0 &&
          exponent > 0.0 && max_decel > 0.0)) {
      throw std::invalid_argument("IDM parameters must all be strictly positive");
    }
  }
};

enum class AgentMode { log_replay, reactive_idm };

/// IDM acceleration for a follower at bumper gap `gap` behind a leader.
inline double idm_acceleration(double gap, double v, double v_lead, const IdmParams & p)
{
  if (!(gap > 0.0)) {
    throw std::invalid_argument("idm_acceleration: gap must be positive");
  }
  const double dynamic = v * p.time_headway + v * (v - v_lead) / (2.0 * std::sqrt(p.max_accel * p.comfort_decel));
  const double desired_gap = p.min_gap + std::max(0.0, dynamic);
  const double free_term = std::pow(v / p.desired_speed, p.exponent);
  const double interaction = (desired_gap / gap) * (desired_gap / gap);
  return std::max(-p.max_decel, p.max_accel * (1.0 - free_term - interaction));
}

/// Gap below which the follower is treated as touching its leader.
inline constexpr double kMinIdmGap = 1e-3;

struct BackgroundStep
{
  std::vector<AgentObservation> agents;
  /// Ids of vehicles that left the corridor and were log-replayed instead.
  std::vector<std::string> replay_fallbacks;
};

namespace detail
{

inline AgentObservation replay_agent(const AgentObservation & a, double t_next)
{
  AgentObservation out = a;
  if (a.track) {
    const AgentSample s = a.track->sample(t_next);
    out.pose = {s.x, s.y, s.yaw};
    out.velocity = s.v;
  }
  return out;
}

/// Constant-velocity fallback for agents without a log.
inline AgentObservation coast_agent(const AgentObservation & a, double dt)
{
  AgentObservation out = a;
  out.pose.x += a.velocity * std::cos(a.pose.yaw) * dt;
  out.pose.y += a.velocity * std::sin(a.pose.yaw) * dt;
  return out;
}

struct LaneEntity
{
  double s{0.0};
  double speed{0.0};
  double length{0.0};
};

inline std::optional<Projection> corridor_projection(const MapContext & map, const Pose & pose, double width)
{
  const Projection p = map.centerline.project(pose.position());
  if (std::abs(p.lateral) > map.lane_half_width + 0.5 * width) {
    return std::nullopt;
  }
  return p;
}

}  // namespace detail

/// Advances every background agent by dt from time t. Agents are updated from
/// the pre-step snapshot, so output does not depend on input order.
inline BackgroundStep step_background(
  const std::vector<AgentObservation> & agents, AgentMode mode, const EgoState & ego, const MapContext & map,
  double t, double dt, const IdmParams & params)
{
  if (!(dt > 0.0)) {
    throw std::invalid_argument("step_background: dt must be positive");
  }
  BackgroundStep out;
  out.agents.reserve(agents.size());
  const double t_next = t + dt;

  if (mode == AgentMode::log_replay) {
    for (const auto & a : agents) {
      out.agents.push_back(a.track ? detail::replay_agent(a, t_next) : detail::coast_agent(a, dt));
    }
    return out;
  }

  params.validate();

  // Every entity overlapping the corridor, as seen before the step.
  std::vector<detail::LaneEntity> lane;
  std::vector<std::optional<Projection>> proj(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    proj[i] = detail::corridor_projection(map, agents[i].pose, agents[i].width);
  }
  auto along = [&](const Pose & pose, double speed, const Projection & p) {
    return std::max(0.0, speed * std::cos(wrap_angle(pose.yaw - p.heading)));
  };
  std::optional<detail::LaneEntity> ego_entity;
  if (const auto ep = detail::corridor_projection(map, ego.pose, ego.width)) {
    ego_entity = detail::LaneEntity{ep->s, along(ego.pose, ego.velocity, *ep), ego.length};
  }

  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentObservation & a = agents[i];
    if (a.category != AgentCategory::vehicle) {
      out.agents.push_back(a.track ? detail::replay_agent(a, t_next) : detail::coast_agent(a, dt));
      continue;
    }
    const Projection self = map.centerline.project(a.pose.position());
    const bool in_corridor = std::abs(self.lateral) <= map.lane_half_width &&
                             std::abs(wrap_angle(a.pose.yaw - self.heading)) < 0.5 * kPi;
    if (!in_corridor) {
      out.replay_fallbacks.push_back(a.id);
      out.agents.push_back(a.track ? detail::replay_agent(a, t_next) : detail::coast_agent(a, dt));
      continue;
    }

    // nearest entity ahead in the corridor, ego included
    double gap = std::numeric_limits<double>::infinity();
    double lead_speed = 0.0;
    auto consider = [&](const detail::LaneEntity & e) {
      if (e.s <= self.s) return;
      const double g = e.s - self.s - 0.5 * (e.length + a.length);
      if (g < gap) {
        gap = g;
        lead_speed = e.speed;
      }
    };
    for (std::size_t j = 0; j < agents.size(); ++j) {
      if (j == i || !proj[j]) continue;
      consider({proj[j]->s, along(agents[j].pose, agents[j].velocity, *proj[j]), agents[j].length});
    }
    if (ego_entity) {
      consider(*ego_entity);
    }

    const double v = a.velocity;
    const double acc = std::isfinite(gap) ? idm_acceleration(std::max(gap, kMinIdmGap), v, lead_speed, params)
                                          : idm_acceleration(std::numeric_limits<double>::max(), v, 0.0, params);
    double v_next = v + acc * dt;
    double ds = v * dt + 0.5 * acc * dt * dt;
    if (v_next < 0.0) {
      // stops within the step
      ds = acc < 0.0 ? -v * v / (2.0 * acc) : 0.0;
      v_next = 0.0;
    }
    const double s_next = self.s + ds;
    const PathPoint c = map.centerline.at(s_next);
    AgentObservation moved = a;
    const Vec2 normal{-std::sin(c.heading), std::cos(c.heading)};
    const Vec2 pos = c.position + self.lateral * normal;
    moved.pose = {pos.x, pos.y, wrap_angle(c.heading)};
    moved.velocity = v_next;
    out.agents.push_back(std::move(moved));
  }
  return out;
}

}  // namespace chainplan

#endif  // CHAINPLAN__BACKGROUND_HPP_
