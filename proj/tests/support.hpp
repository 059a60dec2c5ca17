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

// Builders shared by the unit tests and the acceptance binary.

#ifndef CHAINPLAN_TESTS__SUPPORT_HPP_
#define CHAINPLAN_TESTS__SUPPORT_HPP_

#include "chainplan/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace support
{

using namespace chainplan;

inline std::filesystem::path source_dir() { return CHAINPLAN_SOURCE_DIR; }
inline std::filesystem::path fixture_dir() { return source_dir() / "scenarios"; }
inline std::filesystem::path bad_fixture_dir() { return source_dir() / "tests" / "data"; }

inline std::shared_ptr<const Scenario> fixture(const std::string & name)
{
  return std::make_shared<const Scenario>(load_scenario(fixture_dir() / (name + ".json")));
}

/// Straight corridor along +x from x = -50.
inline MapContext straight_map(double limit = 10.0, double half_width = 2.0, double length = 500.0)
{
  MapContext m;
  std::vector<Vec2> pts;
  for (double x = -50.0; x <= length + 1e-9; x += 10.0) pts.push_back({x, 0.0});
  m.centerline = Polyline(std::move(pts));
  m.lane_half_width = half_width;
  m.speed_limit = limit;
  return m;
}

/// Ego at the origin facing +x on a straight corridor, t = 0.
inline PlanningContext straight_context(double v, double limit = 10.0)
{
  PlanningContext ctx;
  ctx.map = straight_map(limit);
  ctx.ego.pose = {0.0, 0.0, 0.0};
  ctx.ego.velocity = v;
  ctx.ego.history = {-2.0, 0.5, {}};
  for (int k = 0; k <= 4; ++k) ctx.ego.history.poses.push_back({v * 0.5 * (k - 4), 0.0, 0.0});
  ctx.system = {true, true, Pose{}, 4.8, 2.0, 2.7};
  return ctx;
}

/// Agent moving at constant velocity with a matching prediction.
inline AgentObservation moving_agent(
  const std::string & id, AgentCategory cat, Pose pose, double v, double length = 4.5, double width = 1.8,
  double t0 = 0.0, double horizon = 8.0, double dt = 0.5)
{
  AgentObservation a;
  a.id = id;
  a.category = cat;
  a.pose = pose;
  a.velocity = v;
  a.length = length;
  a.width = width;
  a.predicted = {t0, dt, {}};
  for (int k = 0; k <= static_cast<int>(std::lround(horizon / dt)); ++k) {
    const double tau = dt * k;
    a.predicted.poses.push_back({pose.x + v * std::cos(pose.yaw) * tau, pose.y + v * std::sin(pose.yaw) * tau, pose.yaw});
  }
  return a;
}

inline std::string read_file(const std::filesystem::path & p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string & name)
{
  const auto p = std::filesystem::temp_directory_path() / ("chainplan_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Runs a shell command; returns its exit status.
inline int run_command(const std::string & cmd)
{
  const int raw = std::system(cmd.c_str());
  if (raw == -1) return -1;
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

/// Scenario on a straight 400 m road with a constant-speed expert and no
/// agents; enough for closed-loop tests that only need a corridor.
inline Scenario straight_scenario(double v, double limit, TrafficLight light = TrafficLight::none,
                                  std::optional<double> stop_line = std::nullopt, double duration = 20.0)
{
  Scenario sc;
  sc.id = "synthetic";
  sc.resolution = 0.5;
  sc.history_horizon = 2.0;
  sc.plan_horizon = 8.0;
  std::vector<Vec2> pts;
  for (double x = 0.0; x <= 600.0 + 1e-9; x += 10.0) pts.push_back({x, 0.0});
  sc.map.centerline = Polyline(std::move(pts));
  sc.map.lane_half_width = 2.0;
  sc.map.speed_limit = limit;
  sc.map.traffic_light = light;
  sc.map.stop_line_s = stop_line;
  const int frames = static_cast<int>(std::lround(duration / sc.resolution)) + 1;
  for (int i = 0; i < frames; ++i) {
    const double t = sc.resolution * i;
    sc.ego_log.push_back({t, 10.0 + v * t, 0.0, 0.0, v, 0.0});
  }
  return sc;
}

}  // namespace support

#endif  // CHAINPLAN_TESTS__SUPPORT_HPP_
