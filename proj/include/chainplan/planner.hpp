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

#ifndef CHAINPLAN__PLANNER_HPP_
#define CHAINPLAN__PLANNER_HPP_

#include "chainplan/background.hpp"
#include "chainplan/chain_planner.hpp"
#include "chainplan/language.hpp"
#include "chainplan/remote.hpp"
#include "chainplan/scenario.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace chainplan
{

/// What a planner returns for one ego-frame context. A missing trajectory
/// is a failed plan; `failure` says why.
struct PlanResult
{
  std::optional<Trajectory> trajectory;
  std::optional<ReasoningTrace> trace;
  std::string trace_text;
  std::string failure;

  bool ok() const { return trajectory.has_value(); }

  static PlanResult failed(std::string why)
  {
    PlanResult r;
    r.failure = std::move(why);
    return r;
  }
};

class Planner
{
public:
  virtual ~Planner() = default;
  virtual std::string_view name() const = 0;
  /// `context` is ego-centric; the returned trajectory is too.
  virtual PlanResult plan(const PlanningContext & context) = 0;
};

/// Emits the expert's logged future. Closed-loop use re-anchors the log to
/// the simulated ego frame, so the ego is steered back onto the log.
class LogReplayPlanner : public Planner
{
public:
  explicit LogReplayPlanner(std::shared_ptr<const Scenario> scenario) : scenario_(std::move(scenario)) {}

  std::string_view name() const override { return "log_replay"; }

  PlanResult plan(const PlanningContext & ctx) override
  {
    const Scenario & sc = *scenario_;
    Trajectory world{ctx.timestamp, ctx.resolution, {}};
    for (std::size_t k = 0; k <= ctx.plan_steps(); ++k) {
      world.poses.push_back(sc.ego_at(ctx.timestamp + ctx.resolution * static_cast<double>(k)).pose());
    }
    PlanResult r;
    r.trajectory = transform_trajectory(world, ctx.system.frame_origin, true);
    return r;
  }

private:
  std::shared_ptr<const Scenario> scenario_;
};

/// The rule-based reasoning planner.
class ChainPlanner : public Planner
{
public:
  explicit ChainPlanner(ChainConfig cfg = {}) : cfg_(cfg) {}

  std::string_view name() const override { return "chain"; }

  PlanResult plan(const PlanningContext & ctx) override
  {
    ChainPlan p = chain_plan(ctx, cfg_);
    PlanResult r;
    r.trace_text = format_planner_output(p.trace.narrative, p.trajectory, PoseDigits::lossless);
    r.trajectory = std::move(p.trajectory);
    r.trace = std::move(p.trace);
    return r;
  }

private:
  ChainConfig cfg_;
};

/// Lane following with IDM longitudinal control against the nearest entity
/// ahead in the corridor; a red or yellow light acts as a standing leader at
/// the stop line.
class IdmBaselinePlanner : public Planner
{
public:
  explicit IdmBaselinePlanner(IdmParams params = {}, double stop_margin = 1.0)
  : params_(params), stop_margin_(stop_margin)
  {
  }

  std::string_view name() const override { return "idm_baseline"; }

  PlanResult plan(const PlanningContext & ctx) override
  {
    IdmParams p = params_;
    p.desired_speed = ctx.map.speed_limit;
    const Polyline & lane = ctx.map.centerline;
    const double s0 = lane.project(ctx.ego.pose.position()).s;

    struct Leader
    {
      double s;  // rear bumper at t = 0
      double v;
    };
    std::vector<Leader> leaders;
    for (const auto & a : ctx.observations) {
      const Projection pa = lane.project(a.pose.position());
      if (std::abs(pa.lateral) > ctx.map.lane_half_width + 0.5 * a.width || pa.s <= s0) continue;
      const double v = std::max(0.0, a.velocity * std::cos(wrap_angle(a.pose.yaw - pa.heading)));
      leaders.push_back({pa.s - 0.5 * a.length, v});
    }
    const bool light_stop =
      ctx.map.stop_line_s && (ctx.map.traffic_light == TrafficLight::red || ctx.map.traffic_light == TrafficLight::yellow);
    if (light_stop && *ctx.map.stop_line_s - stop_margin_ > s0 + 0.5 * ctx.ego.length) {
      leaders.push_back({*ctx.map.stop_line_s - stop_margin_ + p.min_gap, 0.0});
    }

    constexpr int kSub = 10;
    const double h = ctx.resolution / kSub;
    std::vector<double> travel{0.0};
    double pos = 0.0;
    double v = ctx.ego.velocity;
    for (std::size_t k = 0; k < ctx.plan_steps(); ++k) {
      for (int j = 0; j < kSub; ++j) {
        const double t = h * static_cast<double>(k * kSub + static_cast<std::size_t>(j));
        double gap = std::numeric_limits<double>::max();
        double lead_v = 0.0;
        for (const auto & l : leaders) {
          const double g = l.s + l.v * t - (s0 + pos + 0.5 * ctx.ego.length);
          if (g < gap) {
            gap = g;
            lead_v = l.v;
          }
        }
        const double a = idm_acceleration(std::max(gap, kMinIdmGap), v, lead_v, p);
        if (v + a * h < 0.0) {
          pos += a < 0.0 ? -v * v / (2.0 * a) : 0.0;
          v = 0.0;
        } else {
          pos += v * h + 0.5 * a * h * h;
          v += a * h;
        }
      }
      travel.push_back(pos);
    }
    PlanResult r;
    r.trajectory = trajectory_along_corridor(ctx, travel, ctx.resolution, 0.0, std::max(ctx.ego.velocity, 2.0) * 4.0);
    return r;
  }

private:
  IdmParams params_;
  double stop_margin_;
};

/// Defers to an external model over the wire protocol.
class RemotePlanner : public Planner
{
public:
  RemotePlanner(std::string endpoint, double timeout_s, DecodingParams decoding = {}, int max_tokens = 1024)
  : client_(std::move(endpoint)), timeout_s_(timeout_s), decoding_(decoding), max_tokens_(max_tokens)
  {
  }

  std::string_view name() const override { return "remote"; }

  PlanResult plan(const PlanningContext & ctx) override
  {
    ParsedPlan parsed = remote_plan(ctx, client_, timeout_s_, decoding_, max_tokens_);
    if (const auto * f = std::get_if<PlannerFailure>(&parsed)) {
      return PlanResult::failed(std::string(to_string(f->kind)) + ": " + f->detail);
    }
    auto & out = std::get<PlannerOutput>(parsed);
    PlanResult r;
    r.trace_text = std::move(out.trace_text);
    r.trajectory = std::move(out.trajectory);
    return r;
  }

private:
  RemoteClient client_;
  double timeout_s_;
  DecodingParams decoding_;
  int max_tokens_;
};

}  // namespace chainplan

#endif  // CHAINPLAN__PLANNER_HPP_
