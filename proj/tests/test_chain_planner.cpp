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

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace chainplan;

namespace
{

HazardLevel bracket(double d)
{
  if (d <= 1.5) return HazardLevel::critical;
  if (d <= 3.0) return HazardLevel::hazard;
  return HazardLevel::none;
}

// Stationary ego at the origin and one static 4 x 2 box at clearance d,
// beside it (lateral) or ahead of it (longitudinal). d itself is an exact
// binary fraction, so 1.5 and 3.0 land on the boundaries.
PlanningContext clearance_context(double d, bool lateral)
{
  PlanningContext ctx = support::straight_context(0.0);
  const Pose p = lateral ? Pose{0.0, 1.0 + d + 1.0, 0.0} : Pose{2.4 + d + 2.0, 0.0, 0.0};
  ctx.observations.push_back(support::moving_agent("box", AgentCategory::vehicle, p, 0.0, 4.0, 2.0));
  return ctx;
}

double max_segment_speed(const Trajectory & t)
{
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    m = std::max(m, distance(t.poses[i].position(), t.poses[i + 1].position()) / t.dt);
  }
  return m;
}

PlanningContext curved_context(double kappa)
{
  PlanningContext ctx = support::straight_context(8.0);
  std::vector<Vec2> pts;
  for (double x = -50.0; x <= 20.0; x += 5.0) pts.push_back({x, 0.0});
  const double r = 1.0 / kappa;
  for (int i = 1; i <= 20; ++i) {
    const double th = 0.5 * i / r;
    pts.push_back({20.0 + r * std::sin(th), r * (1.0 - std::cos(th))});
  }
  ctx.map.centerline = Polyline(pts);
  return ctx;
}

}  // namespace

TEST(Clearance, ClassifierBrackets)
{
  EXPECT_EQ(classify_clearance(1.2), HazardLevel::critical);
  EXPECT_EQ(classify_clearance(2.4), HazardLevel::hazard);
  EXPECT_EQ(classify_clearance(1.0), HazardLevel::critical);
  EXPECT_EQ(classify_clearance(1.5), HazardLevel::critical);
  EXPECT_EQ(classify_clearance(1.6), HazardLevel::hazard);
  EXPECT_EQ(classify_clearance(3.0), HazardLevel::hazard);
  EXPECT_EQ(classify_clearance(3.1), HazardLevel::none);
  EXPECT_EQ(classify_clearance(std::nextafter(1.5, 2.0)), HazardLevel::hazard);
  EXPECT_EQ(classify_clearance(std::nextafter(3.0, 4.0)), HazardLevel::none);
}

TEST(Clearance, GridMatchesBracketsExactly)
{
  int cases = 0;
  for (int k = 0; k < 50; ++k) {
    for (bool lateral : {true, false}) {
      const double d = 0.125 * k;
      const auto hz = predict_collisions(clearance_context(d, lateral), 8.0);
      ASSERT_EQ(hz.size(), 1u);
      EXPECT_DOUBLE_EQ(hz[0].min_distance, d);
      EXPECT_EQ(hz[0].level, bracket(hz[0].min_distance)) << d;
      EXPECT_EQ(hz[0].level, bracket(d)) << d;
      ++cases;
    }
  }
  EXPECT_EQ(cases, 100);
}

TEST(Clearance, CenterDistanceSwitch)
{
  ChainConfig cfg;
  cfg.footprint_clearance = false;
  const auto hz = predict_collisions(clearance_context(1.0, true), 8.0, cfg);
  EXPECT_DOUBLE_EQ(hz[0].min_distance, 3.0);
  EXPECT_EQ(hz[0].level, HazardLevel::hazard);
}

TEST(Collision, EmptyAgentList)
{
  EXPECT_TRUE(predict_collisions(support::straight_context(5.0), 8.0).empty());
}

TEST(Collision, ShortPredictionIsFlagged)
{
  PlanningContext ctx = support::straight_context(5.0);
  auto a = support::moving_agent("short", AgentCategory::vehicle, {8.0, 3.5, 0.0}, 0.0, 4.0, 2.0);
  a.predicted.poses.resize(4);
  ctx.observations.push_back(a);
  const auto hz = predict_collisions(ctx, 8.0);
  EXPECT_TRUE(hz[0].truncated);
  const auto plan = chain_plan(ctx);
  EXPECT_NE(plan.trace.narrative[1].find("(partial)"), std::string::npos);
}

TEST(Collision, SortedByDistance)
{
  PlanningContext ctx = support::straight_context(0.0);
  ctx.observations.push_back(support::moving_agent("far", AgentCategory::vehicle, {40.0, 0.0, 0.0}, 0.0));
  ctx.observations.push_back(support::moving_agent("near", AgentCategory::vehicle, {10.0, 0.0, 0.0}, 0.0));
  const auto hz = predict_collisions(ctx, 8.0);
  EXPECT_EQ(hz[0].agent_id, "near");
}

TEST(Preliminary, GoalMapping)
{
  PlanningContext ctx = support::straight_context(5.0);
  EXPECT_EQ(preliminary_plan(ctx), ManeuverIntent::keep_lane);
  ctx.instruction.goal = Goal::turn_right;
  EXPECT_EQ(preliminary_plan(ctx), ManeuverIntent::turn_right);
  ctx.instruction.goal = Goal::yield;
  EXPECT_EQ(preliminary_plan(ctx), ManeuverIntent::yield);
}

TEST(Preliminary, CurvatureAheadTriggersTurn)
{
  const PlanningContext left = curved_context(0.15);
  // three-point oracle on the fixture vertices
  const auto pts = left.map.centerline.points();
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double a = distance(pts[i - 1], pts[i]);
    const double b = distance(pts[i], pts[i + 1]);
    const double c = distance(pts[i - 1], pts[i + 1]);
    best = std::max(best, 2.0 * cross(pts[i] - pts[i - 1], pts[i + 1] - pts[i - 1]) / (a * b * c));
  }
  EXPECT_NEAR(best, 0.15, 1e-3);
  EXPECT_EQ(preliminary_plan(left), ManeuverIntent::turn_left);
  EXPECT_EQ(preliminary_plan(curved_context(-0.15)), ManeuverIntent::turn_right);
  EXPECT_EQ(preliminary_plan(curved_context(0.05)), ManeuverIntent::keep_lane);
}

TEST(Traffic, LightMapping)
{
  PlanningContext ctx = support::straight_context(5.0);
  ctx.map.stop_line_s = 80.0;
  const std::pair<TrafficLight, LightAction> table[] = {
    {TrafficLight::red, LightAction::full_stop},
    {TrafficLight::yellow, LightAction::caution},
    {TrafficLight::green, LightAction::proceed},
    {TrafficLight::none, LightAction::none}};
  for (const auto & [light, action] : table) {
    ctx.map.traffic_light = light;
    const TrafficAssessment t = assess_traffic(ctx);
    EXPECT_EQ(t.light_action, action);
    EXPECT_LE(t.speed_cap, ctx.map.speed_limit);
  }
  ctx.map.traffic_light = TrafficLight::red;
  ctx.instruction.goal = Goal::follow_lane;
  const FinalAction fa = integrate_action(preliminary_plan(ctx), {}, assess_traffic(ctx));
  EXPECT_EQ(fa.intent, ManeuverIntent::stop);
  ASSERT_TRUE(fa.stop_at_s.has_value());
  EXPECT_EQ(*fa.stop_at_s, 80.0);
}

TEST(Traffic, NominalAndLaneViolation)
{
  PlanningContext ctx = support::straight_context(5.0, 10.0);
  TrafficAssessment t = assess_traffic(ctx);
  EXPECT_EQ(t.light_action, LightAction::none);
  EXPECT_FALSE(t.lane_violation);
  EXPECT_FALSE(t.accel_suppressed);
  // footprint entirely outside the lane
  ctx.ego.pose.y = 2.0 + 1.0 + 0.1;
  t = assess_traffic(ctx);
  EXPECT_TRUE(t.lane_violation);
  ctx.ego.pose.y = 0.0;
  ctx.ego.velocity = 9.6;
  EXPECT_TRUE(assess_traffic(ctx).accel_suppressed);
}

TEST(Integrate, PriorityTable)
{
  const HazardAssessment crit{"a", 1.0, 0.0, HazardLevel::critical, false};
  const HazardAssessment haz{"b", 2.0, 0.0, HazardLevel::hazard, false};
  TrafficAssessment green{LightAction::proceed, 10.0, false, false, std::nullopt};
  TrafficAssessment red{LightAction::full_stop, 10.0, false, false, 50.0};
  TrafficAssessment yellow{LightAction::caution, 10.0, false, false, 50.0};

  FinalAction fa = integrate_action(ManeuverIntent::keep_lane, {crit}, green);
  EXPECT_EQ(fa.intent, ManeuverIntent::stop);
  EXPECT_TRUE(fa.emergency);
  fa = integrate_action(ManeuverIntent::keep_lane, {crit}, red);
  EXPECT_TRUE(fa.emergency);
  fa = integrate_action(ManeuverIntent::keep_lane, {haz}, red);
  EXPECT_EQ(fa.intent, ManeuverIntent::stop);
  EXPECT_EQ(fa.stop_at_s, 50.0);
  fa = integrate_action(ManeuverIntent::stop, {haz}, green);
  EXPECT_EQ(fa.intent, ManeuverIntent::stop);
  EXPECT_FALSE(fa.stop_at_s.has_value());
  fa = integrate_action(ManeuverIntent::keep_lane, {haz}, green);
  EXPECT_EQ(fa.intent, ManeuverIntent::keep_lane);
  EXPECT_DOUBLE_EQ(fa.target_speed, 5.0);
  fa = integrate_action(ManeuverIntent::keep_lane, {haz}, yellow);
  EXPECT_DOUBLE_EQ(fa.target_speed, 5.0);
  fa = integrate_action(ManeuverIntent::yield, {}, green);
  EXPECT_EQ(fa.intent, ManeuverIntent::yield);
  EXPECT_DOUBLE_EQ(fa.target_speed, 5.0);
  fa = integrate_action(ManeuverIntent::keep_lane, {}, yellow);
  EXPECT_DOUBLE_EQ(fa.target_speed, 8.0);
  fa = integrate_action(ManeuverIntent::turn_left, {}, green);
  EXPECT_EQ(fa.intent, ManeuverIntent::turn_left);
  EXPECT_DOUBLE_EQ(fa.target_speed, 10.0);
}

TEST(Integrate, TargetNeverAboveCap)
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> cap(1.0, 30.0);
  const ManeuverIntent intents[] = {ManeuverIntent::keep_lane, ManeuverIntent::lane_change_left, ManeuverIntent::turn_right,
                                    ManeuverIntent::stop, ManeuverIntent::yield};
  const LightAction lights[] = {LightAction::full_stop, LightAction::caution, LightAction::proceed, LightAction::none};
  for (int i = 0; i < 500; ++i) {
    TrafficAssessment t{lights[rng() % 4], cap(rng), false, false, std::nullopt};
    std::vector<HazardAssessment> hz;
    if (rng() % 2) hz.push_back({"x", 2.0, 0.0, HazardLevel::hazard, false});
    const FinalAction fa = integrate_action(intents[rng() % 5], hz, t);
    EXPECT_LE(fa.target_speed, t.speed_cap);
  }
}

TEST(Trajectory, SeventeenPoses)
{
  const ChainPlan p = chain_plan(support::straight_context(5.0));
  EXPECT_EQ(p.trajectory.size(), 17u);
  EXPECT_DOUBLE_EQ(p.trajectory.dt, 0.5);
  EXPECT_EQ(p.trajectory.poses.front(), (Pose{0.0, 0.0, 0.0}));
}

TEST(Trajectory, StoppedStaysPut)
{
  const PlanningContext ctx = support::straight_context(0.0);
  const FinalAction stop{ManeuverIntent::stop, 0.0, std::nullopt, false};
  const Trajectory t = generate_trajectory(stop, ctx, 8.0, 0.5);
  for (const auto & p : t.poses) EXPECT_EQ(p, t.poses.front());
}

TEST(Trajectory, ConstantSpeedSpacing)
{
  const PlanningContext ctx = support::straight_context(10.0, 10.0);
  const FinalAction go{ManeuverIntent::keep_lane, 10.0, std::nullopt, false};
  const Trajectory t = generate_trajectory(go, ctx, 8.0, 0.5);
  ASSERT_EQ(t.size(), 17u);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    EXPECT_NEAR(distance(t.poses[i].position(), t.poses[i + 1].position()), 5.0, 1e-9);
    EXPECT_NEAR(t.poses[i + 1].y, 0.0, 1e-12);
  }
}

TEST(Trajectory, LaneChangeReachesAdjacentLane)
{
  PlanningContext ctx = support::straight_context(8.0, 10.0);
  const FinalAction fa{ManeuverIntent::lane_change_left, 8.0, std::nullopt, false};
  const Trajectory t = generate_trajectory(fa, ctx, 8.0, 0.5);
  EXPECT_NEAR(t.poses.back().y, 2.0 * ctx.map.lane_half_width, 1e-9);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) EXPECT_LE(t.poses[i].y, t.poses[i + 1].y + 1e-12);
}

TEST(Trajectory, StopPointBehindBrakesAtOnce)
{
  PlanningContext ctx = support::straight_context(10.0);
  const FinalAction fa{ManeuverIntent::stop, 0.0, -5.0, false};
  const Trajectory t = generate_trajectory(fa, ctx, 8.0, 0.5);
  ChainConfig cfg;
  // v^2 / 2a at the emergency rate
  EXPECT_NEAR(t.poses.back().x, 100.0 / (2.0 * cfg.emergency_decel), 1e-6);
}

TEST(Trajectory, SpeedNeverAboveCapOnRandomContexts)
{
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const double limit = 3.0 + 27.0 * u01(rng);
    PlanningContext ctx = support::straight_context(limit * u01(rng), limit);
    const TrafficLight lights[] = {TrafficLight::red, TrafficLight::yellow, TrafficLight::green, TrafficLight::none};
    ctx.map.traffic_light = lights[rng() % 4];
    ctx.map.stop_line_s = 80.0 + 200.0 * u01(rng);
    if (rng() % 2) {
      ctx.observations.push_back(support::moving_agent("a", AgentCategory::vehicle,
                                                       {20.0 + 60.0 * u01(rng), 6.0 * u01(rng) - 3.0, 0.0},
                                                       limit * u01(rng)));
    }
    const ChainPlan p = chain_plan(ctx);
    EXPECT_LE(max_segment_speed(p.trajectory), p.trace.traffic.speed_cap + 1e-6) << i;
  }
}

TEST(ChainPlan, EmptyRoadGreenKeepsLaneAtLimit)
{
  PlanningContext ctx = support::straight_context(10.0, 10.0);
  ctx.map.traffic_light = TrafficLight::green;
  ctx.map.stop_line_s = 60.0;
  const ChainPlan p = chain_plan(ctx);
  EXPECT_EQ(p.trace.final_action.intent, ManeuverIntent::keep_lane);
  EXPECT_DOUBLE_EQ(p.trace.final_action.target_speed, 10.0);
  EXPECT_NEAR(max_segment_speed(p.trajectory), 10.0, 1e-9);
}

TEST(ChainPlan, FourStagesInOrder)
{
  const ChainPlan p = chain_plan(support::straight_context(5.0));
  ASSERT_EQ(p.trace.narrative.size(), 4u);
  const char * names[] = {"STAGE 1 Preliminary: ", "STAGE 2 Collision: ", "STAGE 3 Traffic: ", "STAGE 4 Final: "};
  for (int i = 0; i < 4; ++i) EXPECT_EQ(p.trace.narrative[i].rfind(names[i], 0), 0u) << p.trace.narrative[i];
}

TEST(ChainPlan, Deterministic)
{
  const auto sc = support::fixture("dense_traffic");
  const PlanningContext ctx = planner_context_at_frame(*sc, 10, {});
  const ChainPlan a = chain_plan(ctx);
  const ChainPlan b = chain_plan(ctx);
  EXPECT_EQ(a.trace.narrative, b.trace.narrative);
  EXPECT_EQ(a.trajectory.poses, b.trajectory.poses);
}

TEST(ChainPlan, RedLightStopsBeforeLine)
{
  const auto sc = support::fixture("red_light");
  const SimulationConfig cfg;
  for (std::size_t i = sc->history_steps(); i < sc->frame_count(); ++i) {
    const PlanningContext ctx = planner_context_at_frame(*sc, i, cfg);
    const ChainPlan p = chain_plan(ctx);
    ASSERT_EQ(p.trace.final_action.intent, ManeuverIntent::stop);
    const double line = *ctx.map.stop_line_s;
    for (const auto & pose : p.trajectory.poses) {
      const double front = ctx.map.centerline.project(pose.position()).s + 0.5 * ctx.ego.length;
      EXPECT_LE(front, line + 0.1) << "frame " << i;
    }
    // standstill by the end of the horizon, when the line is within reach
    const double ego_s = ctx.map.centerline.project({0.0, 0.0}).s;
    if (line - ego_s < 60.0) {
      const auto n = p.trajectory.size();
      EXPECT_NEAR(distance(p.trajectory.poses[n - 1].position(), p.trajectory.poses[n - 2].position()), 0.0, 1e-9);
    }
  }
}

TEST(ChainPlan, CrossingPedestrianIsCritical)
{
  const auto sc = support::fixture("crossing_pedestrian");
  const SimulationConfig cfg;
  double closest = 1e9;
  bool saw_critical = false;
  for (std::size_t i = sc->history_steps(); i + sc->plan_steps() < sc->frame_count(); ++i) {
    const ChainPlan p = chain_plan(planner_context_at_frame(*sc, i, cfg));
    for (const auto & h : p.trace.hazards) {
      if (h.agent_id == "ped_1") closest = std::min(closest, h.min_distance);
    }
    if (p.trace.has_critical()) {
      saw_critical = true;
      EXPECT_EQ(p.trace.final_action.intent, ManeuverIntent::stop);
    }
  }
  EXPECT_TRUE(saw_critical);
  // pedestrian halts with its near edge at y = -2.0; the lane-keeping
  // footprint edge is at y = -1.0
  EXPECT_NEAR(closest, 1.0, 1e-6);
}

TEST(ChainPlan, SafetyDominanceOnRandomContexts)
{
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int critical = 0;
  for (int i = 0; i < 300; ++i) {
    PlanningContext ctx = support::straight_context(12.0 * u01(rng), 12.0);
    for (int k = 0; k < 3; ++k) {
      ctx.observations.push_back(support::moving_agent("a" + std::to_string(k), AgentCategory::pedestrian,
                                                       {80.0 * u01(rng), 10.0 * u01(rng) - 5.0, kPi * u01(rng)},
                                                       2.0 * u01(rng), 0.6, 0.6));
    }
    const ChainPlan p = chain_plan(ctx);
    for (const auto & h : p.trace.hazards) EXPECT_EQ(h.level, bracket(h.min_distance));
    if (p.trace.has_critical()) {
      ++critical;
      EXPECT_EQ(p.trace.final_action.intent, ManeuverIntent::stop);
    }
  }
  EXPECT_GT(critical, 10);
}
