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


// Acceptance checks. One PASS/FAIL line per criterion; the exit status is
// the number of failures (capped at 1). Each check also has a wall-clock
// budget and fails when it runs over.

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>

using namespace chainplan;

namespace
{

struct Verdict
{
  bool pass{true};
  std::string detail;

  void require(bool ok, const std::string & why)
  {
    if (!ok && pass) detail = why;
    pass = pass && ok;
  }
};

int g_failures = 0;

void check(const std::string & name, double budget_s, const std::function<Verdict()> & body)
{
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception & e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt > budget_s) v.require(false, "over time budget");
  char timing[64];
  std::snprintf(timing, sizeof(timing), "%.2fs/%.0fs", dt, budget_s);
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << " [" << timing << "]";
  if (!v.detail.empty()) std::cout << " " << v.detail;
  std::cout << std::endl;
  if (!v.pass) ++g_failures;
}

std::string fmt(double x, int digits = 4)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

double max_segment_speed(const Trajectory & t)
{
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    m = std::max(m, distance(t.poses[i].position(), t.poses[i + 1].position()) / t.dt);
  }
  return m;
}

// --- individual criteria ----------------------------------------------------

Verdict log_replay_anchor()
{
  Verdict v;
  const LoadedScenarios loaded = load_scenario_dir(support::fixture_dir());
  v.require(loaded.problems.empty() && !loaded.scenarios.empty(), "fixture load problems");
  double worst = 100.0;
  for (const auto & sc : loaded.scenarios) {
    LogReplayPlanner p(sc);
    const double ols = open_loop_score(frame_errors(run_open_loop(*sc, p))).ols;
    v.require(std::abs(ols - 100.0) <= 0.01, sc->id + " ols=" + fmt(ols));
    worst = std::min(worst, ols);
  }
  if (v.pass) v.detail = std::to_string(loaded.scenarios.size()) + " fixtures, min ols=" + fmt(worst, 2);
  return v;
}

Verdict threshold_suite()
{
  Verdict v;
  auto context = [](double d, bool lateral) {
    PlanningContext ctx = support::straight_context(0.0);
    // 4 x 2 box beside or ahead of the 4.8 x 2.0 ego at clearance d
    const Pose p = lateral ? Pose{0.0, 1.0 + d + 1.0, 0.0} : Pose{2.4 + d + 2.0, 0.0, 0.0};
    ctx.observations.push_back(support::moving_agent("box", AgentCategory::vehicle, p, 0.0, 4.0, 2.0));
    return ctx;
  };
  auto expected = [](double d) {
    return d <= 1.5 ? HazardLevel::critical : d <= 3.0 ? HazardLevel::hazard : HazardLevel::none;
  };
  const double named[] = {1.0, 1.5, 1.6, 3.0, 3.1};
  const HazardLevel want[] = {HazardLevel::critical, HazardLevel::critical, HazardLevel::hazard, HazardLevel::hazard,
                              HazardLevel::none};
  for (int i = 0; i < 5; ++i) {
    for (bool lateral : {true, false}) {
      const auto hz = predict_collisions(context(named[i], lateral), 8.0);
      v.require(hz.size() == 1 && hz[0].level == want[i], "clearance " + fmt(named[i], 1));
    }
  }
  int cases = 0;
  for (int k = 1; k <= 50; ++k) {
    for (bool lateral : {true, false}) {
      const double d = 0.125 * k;
      const auto hz = predict_collisions(context(d, lateral), 8.0);
      v.require(hz.size() == 1 && hz[0].level == expected(d), "grid d=" + fmt(d, 3));
      ++cases;
    }
  }
  if (v.pass) v.detail = std::to_string(cases) + " grid cases + 10 named";
  return v;
}

Verdict red_green_compliance()
{
  Verdict v;
  auto run = [](const char * name) {
    const auto sc = support::fixture(name);
    ChainPlanner p;
    return std::make_pair(sc, run_closed_loop(*sc, p, SimulationConfig{}));
  };
  const auto [red, red_log] = run("red_light");
  const double line = *red->map.stop_line_s;
  const double half = 0.5 * red_log.config.geometry.length;
  double encroach = -1e9;
  // speed when the bumper first gets within the 0.1 m tolerance of the line;
  // if it never does, the speed at its closest approach (the last tick)
  std::optional<double> speed_at_line;
  for (const auto & t : red_log.ticks) {
    const double front = red->map.centerline.project(t.ego.pose.position()).s + half;
    encroach = std::max(encroach, front - line);
    if (!speed_at_line && front >= line - 0.1) speed_at_line = t.ego.velocity;
  }
  if (!speed_at_line) speed_at_line = red_log.ticks.back().ego.velocity;
  v.require(encroach <= 0.1, "encroachment " + fmt(encroach, 3));
  v.require(*speed_at_line <= 0.1, "speed at line " + fmt(*speed_at_line, 3));
  v.require(encroach >= -5.0, "stopped far short of the line");
  const auto [green, green_log] = run("green_light");
  const double green_front =
    green->map.centerline.project(green_log.ticks.back().ego.pose.position()).s + half;
  v.require(green_front > *green->map.stop_line_s, "green run did not cross");
  if (v.pass) {
    v.detail = "red encroach=" + fmt(encroach, 3) + " v@line=" + fmt(*speed_at_line, 3) +
               ", green front past line by " + fmt(green_front - *green->map.stop_line_s, 1);
  }
  return v;
}

Verdict speed_limit_property()
{
  Verdict v;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst_plan = -1e9;
  double worst_ego = -1e9;
  for (int i = 0; i < 50; ++i) {
    const double limit = 5.0 + 15.0 * u01(rng);
    const double v0 = limit * u01(rng);
    const TrafficLight light = std::array{TrafficLight::none, TrafficLight::green, TrafficLight::yellow}[i % 3];
    Scenario sc = support::straight_scenario(v0, limit, light, 150.0 + 100.0 * u01(rng), 15.0);
    if (i % 2 == 0) {
      // slower lead vehicle in the lane
      auto lead = std::make_shared<AgentTrack>();
      lead->id = "lead";
      const double x0 = 40.0 + 40.0 * u01(rng);
      const double lv = 0.6 * limit * u01(rng);
      for (const auto & e : sc.ego_log) lead->log.push_back({e.t, x0 + lv * e.t, 0.0, 0.0, lv});
      sc.agents.push_back(lead);
    }
    ChainPlanner p;
    SimulationConfig cfg;
    cfg.mode = i % 4 < 2 ? SimulationMode::closed_nonreactive : SimulationMode::closed_reactive;
    const SimulationLog log = run_closed_loop(sc, p, cfg);
    for (const auto & t : log.ticks) {
      worst_ego = std::max(worst_ego, t.ego.velocity - limit);
      if (t.replanned && t.active_plan && t.trace) {
        worst_plan = std::max(worst_plan, max_segment_speed(*t.active_plan) - t.trace->traffic.speed_cap);
      }
    }
  }
  v.require(worst_plan <= 1e-6, "plan exceeds cap by " + fmt(worst_plan, 9));
  v.require(worst_ego <= 0.2, "ego exceeds limit by " + fmt(worst_ego, 4));
  if (v.pass) v.detail = "worst plan-cap=" + fmt(worst_plan, 9) + " worst ego-limit=" + fmt(worst_ego, 4);
  return v;
}

Verdict decoding_suite()
{
  Verdict v;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> len(1, 50);
  for (int i = 0; i < 1000; ++i) {
    LogitVector l;
    for (int k = len(rng); k > 0; --k) l.values.push_back(u(rng));
    // reference argmax, first maximum wins
    std::size_t best = 0;
    for (std::size_t k = 1; k < l.values.size(); ++k) {
      if (l.values[k] > l.values[best]) best = k;
    }
    v.require(decode_token(l, {0.0, 0.75, 0}, rng) == best, "argmax mismatch");
    const auto p = softmax(l);
    v.require(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-12, "softmax sum");
    LogitVector s = l;
    const double c = u(rng) * 10.0;
    for (auto & x : s.values) x += c;
    const auto q = softmax(s);
    for (std::size_t k = 0; k < p.size(); ++k) v.require(std::abs(p[k] - q[k]) <= 1e-12, "shift invariance");
  }
  const std::vector<double> probs{0.6, 0.3, 0.1};
  std::mt19937_64 draw(42);
  std::vector<double> f(3, 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) f[top_p_sample(probs, 0.75, draw)] += 1.0;
  for (auto & x : f) x /= n;
  v.require(std::abs(f[0] - 2.0 / 3.0) <= 0.01 && std::abs(f[1] - 1.0 / 3.0) <= 0.01 && f[2] <= 0.01,
            "nucleus frequencies " + fmt(f[0]) + "," + fmt(f[1]) + "," + fmt(f[2]));
  if (v.pass) v.detail = "nucleus freq=(" + fmt(f[0]) + ", " + fmt(f[1]) + ", " + fmt(f[2]) + ")";
  return v;
}

Verdict lqr_tracking()
{
  Verdict v;
  Trajectory ref{0.0, 0.5, {}};
  for (int k = 0; k <= 60; ++k) ref.poses.push_back({10.0 * 0.5 * k, 0.0, 0.0});
  LqrConfig cfg;
  cfg.dt = 0.1;
  cfg.reference_speed = 10.0;
  const auto gains = solve_lqr_gains(cfg);
  VehicleState s{{0.0, 1.0, 0.0}, 10.0, cfg.wheelbase};
  double after5 = 0.0;
  double overall = 0.0;
  for (int k = 0; k <= 200; ++k) {
    const double e = std::abs(s.pose.y);
    overall = std::max(overall, e);
    if (k >= 50) after5 = std::max(after5, e);
    s = kinematic_step(s, track_trajectory(s, ref, gains, 0.1 * k), cfg.dt);
  }
  v.require(after5 < 0.1, "error after 5 s " + fmt(after5));
  v.require(overall <= 1.0 + 1e-9 && std::isfinite(overall), "diverged");
  if (v.pass) v.detail = "max |e| after 5 s=" + fmt(after5, 5) + ", max overall=" + fmt(overall, 3);
  return v;
}

Verdict idm_suite()
{
  Verdict v;
  EgoState far_ego;
  far_ego.pose = {0.0, 500.0, 0.0};
  AgentObservation car;
  car.id = "car";
  car.category = AgentCategory::vehicle;
  IdmParams p;
  p.desired_speed = 10.0;
  const MapContext map = support::straight_map(10.0, 2.0, 3000.0);
  std::vector<AgentObservation> agents{car};
  for (int k = 0; k < 600; ++k) agents = step_background(agents, AgentMode::reactive_idm, far_ego, map, 0.1 * k, 0.1, p).agents;
  const double conv = std::abs(agents[0].velocity - p.desired_speed);
  v.require(conv <= 1e-3, "free road |v-v0|=" + fmt(conv, 6));

  IdmParams q;
  q.desired_speed = 13.9;
  EgoState leader;
  leader.pose = {150.0, 0.0, 0.0};
  car.velocity = 12.0;
  agents = {car};
  bool overlap = false;
  for (int k = 0; k < 900; ++k) {
    agents = step_background(agents, AgentMode::reactive_idm, leader, map, 0.1 * k, 0.1, q).agents;
    overlap = overlap || boxes_overlap(leader.footprint(), agents[0].footprint());
  }
  const double gap = (leader.pose.x - 0.5 * leader.length) - (agents[0].pose.x + 0.5 * agents[0].length);
  v.require(!overlap, "footprints overlapped");
  v.require(gap >= q.min_gap - 0.1 && gap <= q.min_gap + 1.0, "halt gap " + fmt(gap, 3));
  v.require(agents[0].velocity < 0.05, "follower still moving");
  if (v.pass) v.detail = "|v-v0|@60s=" + fmt(conv, 6) + ", halt gap=" + fmt(gap, 3);
  return v;
}

Verdict transform_metric_oracles()
{
  Verdict v;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-200.0, 200.0);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  double worst_rt = 0.0;
  for (int i = 0; i < 1000; ++i) {
    PlanningContext ctx = support::straight_context(5.0);
    ctx.system.ego_centric = false;
    ctx.ego.pose = {u(rng), u(rng), yaw(rng)};
    for (auto & p : ctx.ego.history.poses) p = {u(rng), u(rng), yaw(rng)};
    for (int a = 0; a < 3; ++a) {
      ctx.observations.push_back(
        support::moving_agent("a" + std::to_string(a), AgentCategory::vehicle, {u(rng), u(rng), yaw(rng)}, 3.0));
    }
    const Pose anchor = ctx.ego.pose;
    const PlanningContext back = from_ego_frame(to_ego_frame(ctx), anchor);
    auto err = [](const Pose & a, const Pose & b) {
      return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(wrap_angle(a.yaw - b.yaw))});
    };
    worst_rt = std::max(worst_rt, err(back.ego.pose, ctx.ego.pose));
    for (std::size_t k = 0; k < ctx.ego.history.poses.size(); ++k) {
      worst_rt = std::max(worst_rt, err(back.ego.history.poses[k], ctx.ego.history.poses[k]));
    }
    for (std::size_t a = 0; a < ctx.observations.size(); ++a) {
      worst_rt = std::max(worst_rt, err(back.observations[a].pose, ctx.observations[a].pose));
      for (std::size_t k = 0; k < ctx.observations[a].predicted.poses.size(); ++k) {
        worst_rt = std::max(worst_rt, err(back.observations[a].predicted.poses[k], ctx.observations[a].predicted.poses[k]));
      }
    }
  }
  v.require(worst_rt < 1e-9, "round trip error " + std::to_string(worst_rt));

  double worst_metric = 0.0;
  std::uniform_real_distribution<double> w(-40.0, 40.0);
  for (int i = 0; i < 100; ++i) {
    Trajectory a{0.0, 0.5, {}}, b{0.0, 0.5, {}};
    for (int k = 0; k < 17; ++k) {
      a.poses.push_back({w(rng), w(rng), yaw(rng)});
      b.poses.push_back({w(rng), w(rng), yaw(rng)});
    }
    // independent recomputation: hypot and atan2(sin, cos)
    double ade = 0, ahe = 0, fde = 0, fhe = 0;
    for (int k = 0; k < 17; ++k) {
      fde = std::hypot(a.poses[k].x - b.poses[k].x, a.poses[k].y - b.poses[k].y);
      const double dy = a.poses[k].yaw - b.poses[k].yaw;
      fhe = std::abs(std::atan2(std::sin(dy), std::cos(dy)));
      ade += fde / 17.0;
      ahe += fhe / 17.0;
    }
    const auto d = displacement_errors(a, b);
    const auto h = heading_errors(a, b);
    worst_metric = std::max({worst_metric, std::abs(d.ade - ade), std::abs(d.fde - fde), std::abs(h.ahe - ahe),
                             std::abs(h.fhe - fhe)});
  }
  v.require(worst_metric <= 1e-12, "metric mismatch " + std::to_string(worst_metric));
  if (v.pass) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "round trip max=%.2e, metric max=%.2e", worst_rt, worst_metric);
    v.detail = buf;
  }
  return v;
}

std::string harness_run(const std::string & args, const std::filesystem::path & out, int * status)
{
  const std::string cmd = std::string(CHAINPLAN_HARNESS) + " run " + args + " --out " + out.string() + " >" +
                          (out / "stdout.txt").string() + " 2>&1";
  *status = support::run_command(cmd);
  return support::read_file(out / "report.json");
}

Verdict determinism()
{
  Verdict v;
  const std::string scen = support::fixture_dir().string();
  const std::string fake = std::string("cmd:") + CHAINPLAN_FAKE_PLANNER + " --pattern valid,malformed";
  const std::vector<std::pair<std::string, std::string>> planners{
    {"log_replay", "--planner log_replay"},
    {"chain", "--planner chain"},
    {"idm_baseline", "--planner idm_baseline"},
    {"remote", "--planner remote --endpoint '" + fake + "' --set remote.timeout_s=2"},
  };
  for (const auto & [name, flags] : planners) {
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
      const auto out = support::scratch_dir("det_" + name + std::to_string(run));
      int status = 0;
      reports[run] = harness_run("--scenarios " + scen + " --mode all --seed 11 " + flags, out, &status);
      v.require(status == 0, name + " exit status " + std::to_string(status));
    }
    v.require(!reports[0].empty() && reports[0] == reports[1], name + " reports differ");
  }
  if (v.pass) v.detail = "4 planners x 3 modes, byte-identical report.json";
  return v;
}

Verdict remote_robustness()
{
  Verdict v;
  const auto scen = support::scratch_dir("remote_scen");
  std::filesystem::copy_file(support::fixture_dir() / "straight_road.json", scen / "straight_road.json");
  const auto out = support::scratch_dir("remote_out");
  const std::string fake =
    std::string("cmd:") + CHAINPLAN_FAKE_PLANNER + " --pattern valid,malformed,slow --slow-ms 2000";
  int status = 0;
  const std::string report = harness_run("--scenarios " + scen.string() + " --planner remote --mode open_loop --endpoint '" +
                                           fake + "' --set remote.timeout_s=0.3",
                                         out, &status);
  v.require(status == 0, "exit status " + std::to_string(status));
  if (report.empty()) {
    v.require(false, "no report");
    return v;
  }
  const auto j = nlohmann::json::parse(report);
  const auto & rec = j.at("scenarios").at(0);
  const auto frames = rec.at("frames").get<std::size_t>();
  const auto failed = rec.at("failed_frames").get<std::size_t>();
  // the double cycles valid, malformed, slow: two of every three frames miss
  const std::size_t expect_failed = frames - (frames + 2) / 3;
  v.require(failed == expect_failed,
            "failed frames " + std::to_string(failed) + " of " + std::to_string(frames) + ", expected " +
              std::to_string(expect_failed));
  // planner failures count as misses
  v.require(rec.at("miss_rate").get<double>() >= static_cast<double>(failed) / static_cast<double>(frames),
            "failed frames not counted as misses");
  if (v.pass) {
    v.detail = std::to_string(failed) + "/" + std::to_string(frames) + " frames missed, ols=" +
               fmt(rec.at("ols").get<double>(), 2);
  }
  return v;
}

}  // namespace

int main()
{
  check("log_replay_anchor", 10, log_replay_anchor);
  check("threshold_suite", 1, threshold_suite);
  check("red_light_compliance", 5, red_green_compliance);
  check("speed_limit_property", 30, speed_limit_property);
  check("decoding_suite", 10, decoding_suite);
  check("lqr_tracking", 5, lqr_tracking);
  check("idm_suite", 5, idm_suite);
  check("transform_metric_oracles", 10, transform_metric_oracles);
  check("determinism", 60, determinism);
  check("remote_robustness", 10, remote_robustness);
  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed") << std::endl;
  return g_failures == 0 ? 0 : 1;
}
