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

#ifndef CHAINPLAN__RENDER_HPP_
#define CHAINPLAN__RENDER_HPP_

#include "chainplan/simulation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace chainplan
{

inline std::string xml_escape(std::string_view s)
{
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // control characters are not allowed in XML 1.0
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') {
          out += '?';
        } else {
          out += c;
        }
    }
  }
  return out;
}

/// Agents flagged critical in any trace of the log.
inline std::set<std::string> critical_agents(const SimulationLog & log)
{
  std::set<std::string> ids;
  for (const auto & tick : log.ticks) {
    if (!tick.trace) continue;
    for (const auto & h : tick.trace->hazards) {
      if (h.level == HazardLevel::critical) ids.insert(h.agent_id);
    }
  }
  return ids;
}

namespace detail
{

struct SvgFrame
{
  double min_x, min_y, max_x, max_y;
  double scale;

  double px(double x) const { return (x - min_x) * scale; }
  double py(double y) const { return (max_y - y) * scale; }
};

inline std::string fmt2(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string svg_points(const SvgFrame & f, const std::vector<Vec2> & pts)
{
  std::string s;
  for (const auto & p : pts) {
    if (!s.empty()) s += ' ';
    s += fmt2(f.px(p.x)) + "," + fmt2(f.py(p.y));
  }
  return s;
}

inline std::string svg_box(const SvgFrame & f, const OrientedBox & box, const std::string & cls, const std::string & id)
{
  std::vector<Vec2> c;
  for (const auto & p : box.corners()) c.push_back(p);
  std::string out = "<polygon class=\"" + cls + "\"";
  if (!id.empty()) out += " data-id=\"" + xml_escape(id) + "\"";
  return out + " points=\"" + svg_points(f, c) + "\"/>\n";
}

}  // namespace detail

/// Top-down view of a run: corridor, centerline, stop line, tracks, agent
/// boxes (critical ones highlighted) and the narrative of the most relevant
/// trace.
inline std::string render_svg(const SimulationLog & log, const Scenario & sc, double px_per_m = 6.0)
{
  const MapContext & map = sc.map;
  double min_x = std::numeric_limits<double>::max();
  double min_y = min_x;
  double max_x = std::numeric_limits<double>::lowest();
  double max_y = max_x;
  auto grow = [&](Vec2 p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  };
  for (const auto & p : map.centerline.points()) grow(p);
  for (const auto & tick : log.ticks) {
    grow(tick.ego.pose.position());
    for (const auto & a : tick.agents) grow(a.pose.position());
  }
  const double margin = map.lane_half_width + 6.0;
  detail::SvgFrame f{min_x - margin, min_y - margin, max_x + margin, max_y + margin, px_per_m};

  const std::set<std::string> critical = critical_agents(log);

  // narrative: first trace with a critical hazard, else the last trace
  std::vector<std::string> narrative;
  for (const auto & tick : log.ticks) {
    if (tick.trace && tick.trace->has_critical()) {
      narrative = tick.trace->narrative;
      break;
    }
  }
  if (narrative.empty()) {
    for (auto it = log.ticks.rbegin(); it != log.ticks.rend(); ++it) {
      if (it->trace) {
        narrative = it->trace->narrative;
        break;
      }
    }
  }

  const double line_h = 14.0;
  const double map_w = (f.max_x - f.min_x) * f.scale;
  const double map_h = (f.max_y - f.min_y) * f.scale;
  const double text_h = line_h * static_cast<double>(narrative.size() + 2);
  const double width = std::max(map_w, 480.0);
  const double height = map_h + text_h;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt2(width) + "\" height=\"" +
       detail::fmt2(height) + "\" viewBox=\"0 0 " + detail::fmt2(width) + " " + detail::fmt2(height) + "\">\n";
  s += "<title>" + xml_escape(log.scenario_id + " / " + log.planner + " / " + std::string(to_string(log.config.mode))) +
       "</title>\n";
  s += "<style>\n"
       ".corridor{fill:none;stroke:#e4e4e4;stroke-linejoin:round}\n"
       ".centerline{fill:none;stroke:#999;stroke-width:1;stroke-dasharray:6 4}\n"
       ".stop-line{stroke-width:3}\n"
       ".stop-line.red{stroke:#d62728}.stop-line.yellow{stroke:#e6b800}.stop-line.green{stroke:#2ca02c}"
       ".stop-line.none{stroke:#555}\n"
       ".ego-track{fill:none;stroke:#1f5fbf;stroke-width:3.5}\n"
       ".agent-track{fill:none;stroke:#888;stroke-width:1}\n"
       ".ego{fill:#1f5fbf;fill-opacity:0.4;stroke:#1f5fbf}\n"
       ".agent{fill:#bbb;fill-opacity:0.4;stroke:#555}\n"
       ".agent.critical{fill:#d62728;fill-opacity:0.5;stroke:#d62728;stroke-width:2}\n"
       ".narrative{font-family:monospace;font-size:11px}\n"
       "</style>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  std::vector<Vec2> lane(map.centerline.points().begin(), map.centerline.points().end());
  s += "<polyline class=\"corridor\" stroke-width=\"" + detail::fmt2(2.0 * map.lane_half_width * f.scale) +
       "\" points=\"" + detail::svg_points(f, lane) + "\"/>\n";
  s += "<polyline class=\"centerline\" points=\"" + detail::svg_points(f, lane) + "\"/>\n";

  if (map.stop_line_s) {
    const PathPoint p = map.centerline.at(*map.stop_line_s);
    const Vec2 n{-std::sin(p.heading), std::cos(p.heading)};
    const Vec2 a = p.position + map.lane_half_width * n;
    const Vec2 b = p.position - map.lane_half_width * n;
    s += "<line class=\"stop-line " + std::string(to_string(map.traffic_light)) + "\" x1=\"" + detail::fmt2(f.px(a.x)) +
         "\" y1=\"" + detail::fmt2(f.py(a.y)) + "\" x2=\"" + detail::fmt2(f.px(b.x)) + "\" y2=\"" +
         detail::fmt2(f.py(b.y)) + "\"/>\n";
  }

  // agent tracks and their last seen footprint, in first-appearance order
  std::vector<std::string> order;
  std::map<std::string, std::vector<Vec2>> tracks;
  std::map<std::string, AgentObservation> last;
  for (const auto & tick : log.ticks) {
    for (const auto & a : tick.agents) {
      if (!tracks.count(a.id)) order.push_back(a.id);
      tracks[a.id].push_back(a.pose.position());
      last[a.id] = a;
    }
  }
  for (const auto & id : order) {
    if (tracks[id].size() >= 2) {
      s += "<polyline class=\"agent-track\" points=\"" + detail::svg_points(f, tracks[id]) + "\"/>\n";
    }
  }
  for (const auto & id : order) {
    s += detail::svg_box(f, last[id].footprint(), critical.count(id) ? "agent critical" : "agent", id);
  }

  std::vector<Vec2> ego_track;
  for (const auto & tick : log.ticks) ego_track.push_back(tick.ego.pose.position());
  if (ego_track.size() >= 2) {
    s += "<polyline class=\"ego-track\" points=\"" + detail::svg_points(f, ego_track) + "\"/>\n";
  }
  if (!log.ticks.empty()) {
    const auto & e = log.ticks.back().ego;
    s += detail::svg_box(f, {e.pose.position(), e.pose.yaw, log.config.geometry.length, log.config.geometry.width},
                         "ego", "");
  }

  s += "<text class=\"narrative\" x=\"8\" y=\"" + detail::fmt2(map_h + line_h) + "\">\n";
  for (std::size_t i = 0; i < narrative.size(); ++i) {
    s += "<tspan x=\"8\" dy=\"" + detail::fmt2(i == 0 ? 0.0 : line_h) + "\">" + xml_escape(narrative[i]) +
         "</tspan>\n";
  }
  s += "</text>\n</svg>\n";
  return s;
}

}  // namespace chainplan

#endif  // CHAINPLAN__RENDER_HPP_
