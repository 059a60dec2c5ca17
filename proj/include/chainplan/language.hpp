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

#ifndef CHAINPLAN__LANGUAGE_HPP_
#define CHAINPLAN__LANGUAGE_HPP_

#include "chainplan/chain_planner.hpp"
#include "chainplan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace chainplan
{

// ---------------------------------------------------------------------------
// Prompt serialization
// ---------------------------------------------------------------------------

enum class PromptSection { system, instruction, observations, ego_state };

inline std::string_view section_header(PromptSection s)
{
  switch (s) {
    case PromptSection::system: return "[SYSTEM]";
    case PromptSection::instruction: return "[INSTRUCTION]";
    case PromptSection::observations: return "[OBSERVATIONS]";
    case PromptSection::ego_state: return "[EGO_STATE]";
  }
  return "";
}

struct PromptText
{
  std::string text;
  /// [begin, end) character range of each section, header included.
  std::map<PromptSection, std::pair<std::size_t, std::size_t>> section_spans;

  std::string_view section(PromptSection s) const
  {
    const auto & [b, e] = section_spans.at(s);
    return std::string_view(text).substr(b, e - b);
  }
};

namespace detail
{

inline std::string num3(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  // avoid "-0.000"
  if (std::string_view(buf) == "-0.000") return "0.000";
  return buf;
}

inline void append_pose_list(std::string & out, std::string_view label, const Trajectory & t)
{
  out += "  ";
  out += label;
  out += " t0=" + num3(t.start_time) + " dt=" + num3(t.dt) + ":";
  for (const auto & p : t.poses) {
    out += " (" + num3(p.x) + "," + num3(p.y) + "," + num3(p.yaw) + ")";
  }
  out += "\n";
}

}  // namespace detail

/// Renders the planning context as prompt text in the fixed section order
/// system, instruction, observations, ego state. Numbers use 3 decimals.
inline PromptText serialize_context(const PlanningContext & ctx)
{
  using detail::num3;
  PromptText out;
  std::string & s = out.text;
  auto open = [&](PromptSection sec) {
    const std::size_t begin = s.size();
    s += section_header(sec);
    s += "\n";
    return begin;
  };

  std::size_t b = open(PromptSection::system);
  s += "frame=" + std::string(ctx.system.ego_centric ? "ego_centric" : "world") +
       " heading=" + std::string(ctx.system.heading_ccw_from_x ? "ccw_from_x" : "cw_from_x") + " yaw_origin=" +
       std::string(ctx.system.ego_centric ? "ego" : "world") + "\n";
  s += "vehicle length=" + num3(ctx.system.length) + " width=" + num3(ctx.system.width) +
       " wheelbase=" + num3(ctx.system.wheelbase) + "\n";
  s += "plan horizon=" + num3(ctx.plan_horizon) + " resolution=" + num3(ctx.resolution) +
       " poses=" + std::to_string(ctx.plan_steps() + 1) + "\n";
  out.section_spans[PromptSection::system] = {b, s.size()};

  b = open(PromptSection::instruction);
  s += "goal=" + std::string(to_string(ctx.instruction.goal)) + "\n";
  if (!ctx.instruction.free_text.empty()) {
    s += "text=" + ctx.instruction.free_text + "\n";
  }
  out.section_spans[PromptSection::instruction] = {b, s.size()};

  b = open(PromptSection::observations);
  s += "map lane_half_width=" + num3(ctx.map.lane_half_width) + " speed_limit=" + num3(ctx.map.speed_limit) +
       " traffic_light=" + std::string(to_string(ctx.map.traffic_light));
  if (ctx.map.stop_line_s) {
    s += " stop_line_s=" + num3(*ctx.map.stop_line_s);
  }
  s += "\n  centerline:";
  for (const auto & p : ctx.map.centerline.points()) {
    s += " (" + num3(p.x) + "," + num3(p.y) + ")";
  }
  s += "\n";
  for (const auto & a : ctx.observations) {
    s += "agent id=" + a.id + " category=" + std::string(to_string(a.category)) + " x=" + num3(a.pose.x) +
         " y=" + num3(a.pose.y) + " yaw=" + num3(a.pose.yaw) + " v=" + num3(a.velocity) +
         " length=" + num3(a.length) + " width=" + num3(a.width) + "\n";
    detail::append_pose_list(s, "predicted", a.predicted);
  }
  out.section_spans[PromptSection::observations] = {b, s.size()};

  b = open(PromptSection::ego_state);
  s += "ego t=" + num3(ctx.timestamp) + " x=" + num3(ctx.ego.pose.x) + " y=" + num3(ctx.ego.pose.y) +
       " yaw=" + num3(ctx.ego.pose.yaw) + " v=" + num3(ctx.ego.velocity) + " a=" + num3(ctx.ego.acceleration) +
       " length=" + num3(ctx.ego.length) + " width=" + num3(ctx.ego.width) + "\n";
  detail::append_pose_list(s, "history", ctx.ego.history);
  out.section_spans[PromptSection::ego_state] = {b, s.size()};
  return out;
}

/// key=value fields of the first line in `text` starting with `prefix`.
inline std::map<std::string, std::string> parse_fields(std::string_view text, std::string_view prefix)
{
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    if (line.substr(0, prefix.size()) == prefix) {
      std::size_t i = prefix.size();
      while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = line.find(' ', i);
        if (j == std::string_view::npos) j = line.size();
        const std::string_view tok = line.substr(i, j - i);
        const std::size_t eq = tok.find('=');
        if (eq != std::string_view::npos) {
          out[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
        }
        i = j;
      }
      return out;
    }
    pos = end + 1;
  }
  return out;
}

struct EgoBlock
{
  double t{0.0};
  double x{0.0};
  double y{0.0};
  double yaw{0.0};
  double v{0.0};
  double a{0.0};
};

/// Reads the ego line back out of a serialized prompt.
inline std::optional<EgoBlock> parse_ego_block(std::string_view prompt)
{
  const auto at = prompt.find(section_header(PromptSection::ego_state));
  if (at == std::string_view::npos) return std::nullopt;
  const auto f = parse_fields(prompt.substr(at), "ego ");
  try {
    return EgoBlock{std::stod(f.at("t")), std::stod(f.at("x")), std::stod(f.at("y")),
                    std::stod(f.at("yaw")), std::stod(f.at("v")), std::stod(f.at("a"))};
  } catch (const std::exception &) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Planner output text
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTrajectoryMarker = "TRAJECTORY:";

/// Number format of the TRAJECTORY block.
enum class PoseDigits { six_decimals, lossless };

/// Stage lines followed by the TRAJECTORY block of (x, y, yaw) triples.
inline std::string format_planner_output(
  const std::vector<std::string> & narrative, const Trajectory & traj, PoseDigits digits = PoseDigits::six_decimals)
{
  std::string out;
  for (const auto & line : narrative) {
    out += line;
    out += "\n";
  }
  out += kTrajectoryMarker;
  out += "\n";
  const char * f = digits == PoseDigits::six_decimals ? "(%.6f, %.6f, %.6f)\n" : "(%.17g, %.17g, %.17g)\n";
  char buf[128];
  for (const auto & p : traj.poses) {
    std::snprintf(buf, sizeof(buf), f, p.x, p.y, p.yaw);
    out += buf;
  }
  return out;
}

enum class PlannerErrorKind { missing_block, wrong_length, non_finite, malformed, timeout, connection, bad_response };

inline std::string_view to_string(PlannerErrorKind k)
{
  switch (k) {
    case PlannerErrorKind::missing_block: return "missing_block";
    case PlannerErrorKind::wrong_length: return "wrong_length";
    case PlannerErrorKind::non_finite: return "non_finite";
    case PlannerErrorKind::malformed: return "malformed";
    case PlannerErrorKind::timeout: return "timeout";
    case PlannerErrorKind::connection: return "connection";
    case PlannerErrorKind::bad_response: return "bad_response";
  }
  return "malformed";
}

struct PlannerFailure
{
  PlannerErrorKind kind{PlannerErrorKind::malformed};
  std::string detail;
};

struct PlannerOutput
{
  std::string trace_text;
  Trajectory trajectory;
};

using ParsedPlan = std::variant<PlannerOutput, PlannerFailure>;

namespace detail
{

inline std::optional<double> parse_number(std::string_view s)
{
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  const std::string tmp(s);
  char * end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Extracts the trajectory from model text. Expects horizon/dt + 1 triples
/// after the TRAJECTORY: marker; the text before it is kept as the trace.
inline ParsedPlan parse_planner_output(std::string_view text, double horizon, double dt)
{
  const auto marker = text.find(kTrajectoryMarker);
  if (marker == std::string_view::npos) {
    return PlannerFailure{PlannerErrorKind::missing_block, "no TRAJECTORY: block"};
  }
  PlannerOutput out;
  out.trace_text = std::string(text.substr(0, marker));
  out.trajectory.dt = dt;
  const std::string_view body = text.substr(marker + kTrajectoryMarker.size());
  std::size_t pos = 0;
  while (true) {
    const auto open = body.find('(', pos);
    if (open == std::string_view::npos) break;
    const auto close = body.find(')', open);
    if (close == std::string_view::npos) {
      return PlannerFailure{PlannerErrorKind::malformed, "unterminated pose triple"};
    }
    const std::string_view inner = body.substr(open + 1, close - open - 1);
    double vals[3];
    std::size_t field = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= inner.size(); ++i) {
      if (i == inner.size() || inner[i] == ',') {
        if (field >= 3) {
          return PlannerFailure{PlannerErrorKind::malformed, "pose with more than three fields"};
        }
        const auto v = detail::parse_number(inner.substr(start, i - start));
        if (!v) {
          return PlannerFailure{PlannerErrorKind::malformed, "unparseable number in pose " +
                                                               std::to_string(out.trajectory.poses.size())};
        }
        vals[field++] = *v;
        start = i + 1;
      }
    }
    if (field != 3) {
      return PlannerFailure{PlannerErrorKind::malformed, "pose without three fields"};
    }
    if (!std::isfinite(vals[0]) || !std::isfinite(vals[1]) || !std::isfinite(vals[2])) {
      return PlannerFailure{PlannerErrorKind::non_finite, "non-finite value in pose " +
                                                            std::to_string(out.trajectory.poses.size())};
    }
    out.trajectory.poses.push_back({vals[0], vals[1], wrap_angle(vals[2])});
    pos = close + 1;
  }
  const auto expected = static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
  if (out.trajectory.poses.size() != expected) {
    return PlannerFailure{PlannerErrorKind::wrong_length, "expected " + std::to_string(expected) + " poses, got " +
                                                            std::to_string(out.trajectory.poses.size())};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

struct LogitVector
{
  std::vector<double> values;
};

struct DecodingParams
{
  double temperature{0.0};
  double top_p{0.75};
  std::uint64_t seed{0};

  void validate() const
  {
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
      throw std::invalid_argument("temperature must be >= 0");
    }
    if (!(top_p > 0.0 && top_p <= 1.0)) {
      throw std::invalid_argument("top_p must lie in (0, 1]");
    }
  }
};

struct ScaledLogits
{
  LogitVector logits;
  /// Temperature zero: sampling degenerates to argmax and logits are unscaled.
  bool argmax_mode{false};
};

inline ScaledLogits temperature_scale(const LogitVector & logits, double t)
{
  if (t < 0.0) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  if (t == 0.0) {
    return {logits, true};
  }
  ScaledLogits out{logits, false};
  for (auto & v : out.logits.values) {
    v /= t;
  }
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits)
{
  if (logits.empty()) {
    throw std::invalid_argument("softmax of empty logits");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
  }
  const double z = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto & v : p) {
    v /= z;
  }
  return p;
}

inline std::vector<double> softmax(const LogitVector & logits) { return softmax(std::span<const double>(logits.values)); }

/// Index of the largest value; the lowest index wins exact ties.
inline std::size_t argmax(std::span<const double> v)
{
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Smallest probability-sorted prefix whose mass reaches p (never empty).
/// Equal probabilities are ordered by ascending index.
inline std::vector<std::size_t> nucleus(std::span<const double> probs, double p)
{
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("top_p must lie in (0, 1]");
  }
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  std::vector<std::size_t> keep;
  double mass = 0.0;
  for (const auto i : order) {
    keep.push_back(i);
    mass += probs[i];
    if (mass >= p) break;
  }
  return keep;
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double uniform01(std::mt19937_64 & rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t top_p_sample(std::span<const double> probs, double p, std::mt19937_64 & rng)
{
  const auto keep = nucleus(probs, p);
  double mass = 0.0;
  for (const auto i : keep) mass += probs[i];
  const double u = uniform01(rng) * mass;
  double acc = 0.0;
  for (const auto i : keep) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return keep.back();
}

/// Temperature scaling, softmax, then nucleus sampling; argmax at t = 0.
inline std::size_t decode_token(const LogitVector & logits, const DecodingParams & params, std::mt19937_64 & rng)
{
  params.validate();
  if (logits.values.empty()) {
    throw std::invalid_argument("decode_token: empty logits");
  }
  const ScaledLogits scaled = temperature_scale(logits, params.temperature);
  if (scaled.argmax_mode) {
    return argmax(scaled.logits.values);
  }
  const auto probs = softmax(scaled.logits);
  return top_p_sample(probs, params.top_p, rng);
}

}  // namespace chainplan

#endif  // CHAINPLAN__LANGUAGE_HPP_
