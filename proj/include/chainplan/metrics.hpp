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

#ifndef CHAINPLAN__METRICS_HPP_
#define CHAINPLAN__METRICS_HPP_

#include "chainplan/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace chainplan
{

struct MetricsConfig
{
  double miss_threshold{8.0};
  double sigma_distance{2.0};
  double sigma_heading{0.5};
  double comfort_accel{3.0};
  double comfort_jerk{5.0};
};

struct DisplacementErrors
{
  double ade{0.0};
  double fde{0.0};
};

struct HeadingErrors
{
  double ahe{0.0};
  double fhe{0.0};
};

inline void check_comparable(const Trajectory & a, const Trajectory & b)
{
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("trajectories differ in length or are empty");
  }
}

inline DisplacementErrors displacement_errors(const Trajectory & predicted, const Trajectory & truth)
{
  check_comparable(predicted, truth);
  if (std::abs(predicted.dt - truth.dt) > 1e-9) {
    throw std::invalid_argument("trajectories differ in dt");
  }
  double sum = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    last = distance(predicted.poses[i].position(), truth.poses[i].position());
    sum += last;
  }
  return {sum / static_cast<double>(predicted.size()), last};
}

inline HeadingErrors heading_errors(const Trajectory & predicted, const Trajectory & truth)
{
  check_comparable(predicted, truth);
  double sum = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    last = std::abs(wrap_angle(predicted.poses[i].yaw - truth.poses[i].yaw));
    sum += last;
  }
  return {sum / static_cast<double>(predicted.size()), last};
}

/// Per-frame open-loop errors. `missed` marks a planner failure.
struct FrameErrors
{
  bool missed{false};
  double ade{0.0};
  double fde{0.0};
  double ahe{0.0};
  double fhe{0.0};
};

inline double miss_rate(std::span<const FrameErrors> frames, double threshold)
{
  if (frames.empty()) {
    throw std::invalid_argument("miss_rate of no frames");
  }
  std::size_t missed = 0;
  for (const auto & f : frames) {
    if (f.missed || f.fde > threshold) ++missed;
  }
  return static_cast<double>(missed) / static_cast<double>(frames.size());
}

struct OpenLoopScore
{
  double ade{0.0};
  double fde{0.0};
  double ahe{0.0};
  double fhe{0.0};
  double miss_rate{0.0};
  double ols{0.0};
  std::size_t frames{0};
  std::size_t failed_frames{0};
};

/// Kernel score of one frame in [0, 1]; exactly 1 at zero error.
inline double frame_error_score(const FrameErrors & f, const MetricsConfig & cfg = {})
{
  return 0.25 * (std::exp(-f.ade / cfg.sigma_distance) + std::exp(-f.fde / cfg.sigma_distance) +
                 std::exp(-f.ahe / cfg.sigma_heading) + std::exp(-f.fhe / cfg.sigma_heading));
}

/// OLS = 100 * (1 - miss rate) * mean kernel score over scored frames.
/// Error means are over frames where the planner produced a trajectory.
inline OpenLoopScore open_loop_score(std::span<const FrameErrors> frames, const MetricsConfig & cfg = {})
{
  if (frames.empty()) {
    throw std::invalid_argument("open_loop_score of no frames");
  }
  OpenLoopScore s;
  s.frames = frames.size();
  s.miss_rate = miss_rate(frames, cfg.miss_threshold);
  double kernel = 0.0;
  std::size_t scored = 0;
  for (const auto & f : frames) {
    if (f.missed) {
      ++s.failed_frames;
      continue;
    }
    ++scored;
    s.ade += f.ade;
    s.fde += f.fde;
    s.ahe += f.ahe;
    s.fhe += f.fhe;
    kernel += frame_error_score(f, cfg);
  }
  if (scored == 0) {
    s.ols = 0.0;
    return s;
  }
  const auto n = static_cast<double>(scored);
  s.ade /= n;
  s.fde /= n;
  s.ahe /= n;
  s.fhe /= n;
  s.ols = std::clamp(100.0 * (1.0 - s.miss_rate) * (kernel / n), 0.0, 100.0);
  return s;
}

inline std::vector<FrameErrors> frame_errors(const OpenLoopResult & r)
{
  std::vector<FrameErrors> out;
  for (const auto & f : r.frames) {
    FrameErrors e;
    if (!f.predicted) {
      e.missed = true;
    } else {
      const auto d = displacement_errors(*f.predicted, f.truth);
      const auto h = heading_errors(*f.predicted, f.truth);
      e = {false, d.ade, d.fde, h.ahe, h.fhe};
    }
    out.push_back(e);
  }
  return out;
}

struct ClosedLoopScore
{
  bool collision_free{true};
  double drivable_compliance{1.0};
  double progress_ratio{0.0};
  double comfort{1.0};
  double score{0.0};
  std::size_t planner_failures{0};
};

inline bool footprint_in_corridor(const OrientedBox & box, const MapContext & map)
{
  for (const auto & c : box.corners()) {
    if (std::abs(map.centerline.project(c).lateral) > map.lane_half_width) return false;
  }
  return true;
}

/// Collision gate times the mean of drivable compliance, progress against
/// the expert, and comfort; 0 to 100.
inline ClosedLoopScore closed_loop_score(const SimulationLog & log, const Scenario & sc, const MetricsConfig & cfg = {})
{
  ClosedLoopScore s;
  if (log.ticks.empty()) {
    throw std::invalid_argument("closed_loop_score of an empty log");
  }
  const EgoGeometry & g = log.config.geometry;
  std::size_t inside = 0;
  std::size_t comfortable = 0;
  for (std::size_t i = 0; i < log.ticks.size(); ++i) {
    const Tick & tick = log.ticks[i];
    const OrientedBox ego{tick.ego.pose.position(), tick.ego.pose.yaw, g.length, g.width};
    for (const auto & a : tick.agents) {
      if (boxes_overlap(ego, a.footprint())) s.collision_free = false;
    }
    if (footprint_in_corridor(ego, sc.map)) ++inside;
    const double jerk = i == 0 ? 0.0 : (tick.acceleration - log.ticks[i - 1].acceleration) / log.config.substep;
    if (std::abs(tick.acceleration) <= cfg.comfort_accel && std::abs(jerk) <= cfg.comfort_jerk) ++comfortable;
  }
  const auto n = static_cast<double>(log.ticks.size());
  s.drivable_compliance = static_cast<double>(inside) / n;
  s.comfort = static_cast<double>(comfortable) / n;
  s.planner_failures = log.ticks.back().planner_failures;

  const Polyline & lane = sc.map.centerline;
  const double t0 = log.ticks.front().t;
  const double t1 = log.ticks.back().t;
  const double ego_progress = lane.project(log.ticks.back().ego.pose.position()).s -
                              lane.project(log.ticks.front().ego.pose.position()).s;
  const double expert_progress = lane.project(sc.ego_at(t1).pose().position()).s -
                                 lane.project(sc.ego_at(t0).pose().position()).s;
  s.progress_ratio = expert_progress < 0.1 ? 1.0 : std::clamp(ego_progress / expert_progress, 0.0, 1.0);

  s.score = s.collision_free ? 100.0 * (s.drivable_compliance + s.progress_ratio + s.comfort) / 3.0 : 0.0;
  s.score = std::clamp(s.score, 0.0, 100.0);
  return s;
}

}  // namespace chainplan

#endif  // CHAINPLAN__METRICS_HPP_
