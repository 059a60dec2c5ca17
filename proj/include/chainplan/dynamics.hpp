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

#ifndef CHAINPLAN__DYNAMICS_HPP_
#define CHAINPLAN__DYNAMICS_HPP_

#include "chainplan/scenario.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace chainplan
{

struct VehicleState
{
  Pose pose;
  double velocity{0.0};
  double wheelbase{2.7};

  friend bool operator==(const VehicleState &, const VehicleState &) = default;
};

struct Control
{
  double acceleration{0.0};
  double steering_angle{0.0};

  friend bool operator==(const Control &, const Control &) = default;
};

struct ControlLimits
{
  double min_accel{-4.0};
  double max_accel{3.0};
  double max_steer{0.6};

  Control clamp(Control c) const
  {
    return {std::clamp(c.acceleration, min_accel, max_accel), std::clamp(c.steering_angle, -max_steer, max_steer)};
  }
};

/// Forward-Euler kinematic bicycle step. Speed never goes negative.
inline VehicleState kinematic_step(const VehicleState & s, const Control & u, double dt)
{
  VehicleState n = s;
  n.pose.x = s.pose.x + s.velocity * std::cos(s.pose.yaw) * dt;
  n.pose.y = s.pose.y + s.velocity * std::sin(s.pose.yaw) * dt;
  n.pose.yaw = wrap_angle(s.pose.yaw + (s.velocity / s.wheelbase) * std::tan(u.steering_angle) * dt);
  n.velocity = std::max(0.0, s.velocity + u.acceleration * dt);
  return n;
}

// ---------------------------------------------------------------------------
// Finite-horizon discrete Riccati recursion
// ---------------------------------------------------------------------------

template <int Nx, int Nu>
struct RiccatiSolution
{
  using Gain = Eigen::Matrix<double, Nu, Nx>;
  using CostToGo = Eigen::Matrix<double, Nx, Nx>;

  /// gains[t] is the feedback for step t, u_t = -gains[t] * x_t.
  std::vector<Gain> gains;
  /// cost_to_go[t] for t = 0..N; cost_to_go[N] is the terminal cost.
  std::vector<CostToGo> cost_to_go;
};

/// Backward recursion for x' = A x + B u with stage cost x'Qx + u'Ru and
/// terminal cost x'Qf x over `horizon` steps.
template <int Nx, int Nu>
RiccatiSolution<Nx, Nu> finite_horizon_riccati(
  const Eigen::Matrix<double, Nx, Nx> & A, const Eigen::Matrix<double, Nx, Nu> & B,
  const Eigen::Matrix<double, Nx, Nx> & Q, const Eigen::Matrix<double, Nu, Nu> & R,
  const Eigen::Matrix<double, Nx, Nx> & Qf, std::size_t horizon)
{
  RiccatiSolution<Nx, Nu> sol;
  sol.gains.resize(horizon);
  sol.cost_to_go.resize(horizon + 1);
  Eigen::Matrix<double, Nx, Nx> P = Qf;
  sol.cost_to_go[horizon] = P;
  for (std::size_t k = horizon; k-- > 0;) {
    const Eigen::Matrix<double, Nu, Nu> S = R + B.transpose() * P * B;
    const Eigen::Matrix<double, Nu, Nx> K = S.ldlt().solve(B.transpose() * P * A);
    const Eigen::Matrix<double, Nx, Nx> Acl = A - B * K;
    // Joseph form keeps P symmetric positive semidefinite under rounding.
    Eigen::Matrix<double, Nx, Nx> next = Acl.transpose() * P * Acl + Q + K.transpose() * R * K;
    P = 0.5 * (next + next.transpose());
    sol.gains[k] = K;
    sol.cost_to_go[k] = P;
  }
  return sol;
}

/// Weights and linearization point of the path-tracking LQR.
struct LqrConfig
{
  double q_lateral{1.0};
  double q_heading{3.0};
  double q_velocity{1.0};
  double r_steer{2.0};
  double r_accel{1.0};
  std::size_t horizon_steps{50};
  double dt{0.1};
  /// Speed the error dynamics are linearized about.
  double reference_speed{10.0};
  double wheelbase{2.7};
};

using TrackingGain = Eigen::Matrix<double, 2, 3>;

/// Error dynamics of the tracking problem: state (lateral, heading, speed)
/// error, controls (steering, acceleration).
struct ErrorModel
{
  Eigen::Matrix3d A;
  Eigen::Matrix<double, 3, 2> B;
  Eigen::Matrix3d Q;
  Eigen::Matrix2d R;
};

inline ErrorModel tracking_error_model(const LqrConfig & c)
{
  if (!(c.r_steer > 0.0) || !(c.r_accel > 0.0)) {
    throw std::invalid_argument("LQR control weights must be strictly positive");
  }
  if (c.q_lateral < 0.0 || c.q_heading < 0.0 || c.q_velocity < 0.0) {
    throw std::invalid_argument("LQR state weights must be nonnegative");
  }
  if (c.horizon_steps < 1 || !(c.dt > 0.0) || !(c.wheelbase > 0.0)) {
    throw std::invalid_argument("LQR horizon, dt and wheelbase must be positive");
  }
  const double v = c.reference_speed;
  ErrorModel m;
  m.A << 1.0, v * c.dt, 0.0,
         0.0, 1.0, 0.0,
         0.0, 0.0, 1.0;
  m.B << 0.0, 0.0,
         v * c.dt / c.wheelbase, 0.0,
         0.0, c.dt;
  m.Q = Eigen::Vector3d(c.q_lateral, c.q_heading, c.q_velocity).asDiagonal();
  m.R = Eigen::Vector2d(c.r_steer, c.r_accel).asDiagonal();
  return m;
}

/// Time-indexed feedback gains; the terminal cost equals the stage cost.
inline std::vector<TrackingGain> solve_lqr_gains(const LqrConfig & config)
{
  const ErrorModel m = tracking_error_model(config);
  return finite_horizon_riccati<3, 2>(m.A, m.B, m.Q, m.R, m.Q, config.horizon_steps).gains;
}

/// Reference quantities at one instant of a planned trajectory.
struct ReferencePoint
{
  Pose pose;
  double speed{0.0};
  double acceleration{0.0};
  double curvature{0.0};
};

/// Speed and acceleration come from finite differences of the poses; segment
/// speeds are attached to segment midpoints and interpolated linearly.
inline ReferencePoint reference_at(const Trajectory & ref, double t)
{
  ReferencePoint r;
  r.pose = ref.sample(t);
  const std::size_t n = ref.poses.size();
  if (n < 2) {
    return r;
  }
  const std::size_t segs = n - 1;
  auto seg_speed = [&](std::size_t i) { return distance(ref.poses[i + 1].position(), ref.poses[i].position()) / ref.dt; };
  const double u = (t - ref.start_time) / ref.dt - 0.5;
  if (segs == 1) {
    r.speed = seg_speed(0);
  } else {
    const double lo = std::clamp(std::floor(u), 0.0, static_cast<double>(segs - 2));
    const auto i = static_cast<std::size_t>(lo);
    const double slope = (seg_speed(i + 1) - seg_speed(i)) / ref.dt;
    const double uc = std::clamp(u, -0.5, static_cast<double>(segs) - 0.5);
    r.speed = std::max(0.0, seg_speed(i) + (uc - lo) * ref.dt * slope);
    r.acceleration = r.speed > 0.0 ? slope : std::min(0.0, slope);
  }
  // curvature from the heading change across the segment that holds t
  const double w = std::clamp(std::floor((t - ref.start_time) / ref.dt + 1e-9), 0.0, static_cast<double>(segs - 1));
  const auto j = static_cast<std::size_t>(w);
  const double len = distance(ref.poses[j + 1].position(), ref.poses[j].position());
  if (len > 1e-6) {
    r.curvature = wrap_angle(ref.poses[j + 1].yaw - ref.poses[j].yaw) / len;
  }
  return r;
}

/// Tracking errors (lateral positive to the left of the reference heading).
inline Eigen::Vector3d tracking_error(const VehicleState & s, const ReferencePoint & r)
{
  const Vec2 d = s.pose.position() - r.pose.position();
  const Vec2 dir{std::cos(r.pose.yaw), std::sin(r.pose.yaw)};
  return {cross(dir, d), wrap_angle(s.pose.yaw - r.pose.yaw), s.velocity - r.speed};
}

/// LQR feedback plus curvature/acceleration feedforward at time t, using the
/// leading gain of a freshly solved horizon.
inline Control track_trajectory(
  const VehicleState & state, const Trajectory & reference, const std::vector<TrackingGain> & gains, double t,
  const ControlLimits & limits = {})
{
  if (reference.empty()) {
    throw std::invalid_argument("track_trajectory: empty reference");
  }
  if (gains.empty()) {
    throw std::invalid_argument("track_trajectory: no gains");
  }
  const ReferencePoint r = reference_at(reference, t);
  const Eigen::Vector3d e = tracking_error(state, r);
  const Eigen::Vector2d u = -gains.front() * e;
  Control c;
  c.steering_angle = std::atan(state.wheelbase * r.curvature) + u(0);
  c.acceleration = r.acceleration + u(1);
  return limits.clamp(c);
}

}  // namespace chainplan

#endif  // CHAINPLAN__DYNAMICS_HPP_
