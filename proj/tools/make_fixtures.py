#!/usr/bin/env python3
# Copyright 2026 The chainplan Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the bundled scenario fixtures.

    python3 tools/make_fixtures.py [--out scenarios] [--bad tests/data]
"""

import argparse
import json
import math
import os

DT = 0.5
DURATION = 20.0
FRAMES = int(round(DURATION / DT)) + 1
EGO_HALF_LENGTH = 2.4


def straight(length=400.0, step=10.0):
    n = int(length / step)
    return [[i * step, 0.0] for i in range(n + 1)]


def arc(radius=200.0, straight_in=40.0, angle=0.8, step=5.0):
    pts = [[x, 0.0] for x in frange(0.0, straight_in, step)]
    n = int(radius * angle / step)
    for i in range(n + 1):
        th = i * step / radius
        pts.append([straight_in + radius * math.sin(th), radius * (1.0 - math.cos(th))])
    return pts


def frange(a, b, step):
    out = []
    x = a
    while x < b - 1e-9:
        out.append(x)
        x += step
    return out


class Path:
    def __init__(self, pts):
        self.pts = pts
        self.s = [0.0]
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            self.s.append(self.s[-1] + math.hypot(x1 - x0, y1 - y0))

    def at(self, s, offset=0.0):
        i = 0
        while i < len(self.pts) - 2 and self.s[i + 1] < s:
            i += 1
        (x0, y0), (x1, y1) = self.pts[i], self.pts[i + 1]
        seg = self.s[i + 1] - self.s[i]
        u = (s - self.s[i]) / seg
        h = math.atan2(y1 - y0, x1 - x0)
        return (x0 + u * (x1 - x0) - offset * math.sin(h), y0 + u * (y1 - y0) + offset * math.cos(h), h)


def profile(s0, v0, accel_fn):
    """Integrates a longitudinal profile; accel_fn(t, s, v) -> a."""
    out = []
    s, v = s0, v0
    sub = 20
    h = DT / sub
    for k in range(FRAMES):
        t = k * DT
        a = accel_fn(t, s, v)
        out.append((t, s, v, a))
        for _ in range(sub):
            a = accel_fn(t, s, v)
            if v + a * h < 0.0:
                s += v * v / (-2.0 * a) if a < 0 else 0.0
                v = 0.0
            else:
                s += v * h + 0.5 * a * h * h
                v += a * h
            t += h
    return out


def ego_log(path, prof):
    log = []
    for t, s, v, a in prof:
        x, y, h = path.at(s)
        log.append({"t": round(t, 6), "x": round(x, 6), "y": round(y, 6), "yaw": round(h, 6),
                    "v": round(v, 6), "a": round(a, 6)})
    return log


def agent(aid, category, length, width, samples):
    return {"id": aid, "category": category, "length_m": length, "width_m": width,
            "log": [{"t": round(t, 6), "x": round(x, 6), "y": round(y, 6), "yaw": round(yaw, 6),
                     "v": round(v, 6)} for t, x, y, yaw, v in samples]}


def lane_agent(path, aid, s0, v, offset=0.0, category="vehicle", length=4.5, width=1.8, t_from=0.0, t_to=DURATION):
    samples = []
    for k in range(FRAMES):
        t = k * DT
        if t < t_from - 1e-9 or t > t_to + 1e-9:
            continue
        s = s0 + v * t
        x, y, h = path.at(s, offset)
        samples.append((t, x, y, h if v >= 0 else h + math.pi, abs(v)))
    return agent(aid, category, length, width, samples)


def scenario(sid, pts, ego, agents=(), light="none", stop_line=None, limit=12.0, goal="follow_lane", text=None,
             half_width=2.0):
    m = {"centerline": pts, "lane_half_width_m": half_width, "traffic_light": light, "speed_limit_mps": limit}
    if stop_line is not None:
        m["stop_line_s"] = stop_line
    doc = {"id": sid, "resolution_s": DT, "history_horizon_s": 2.0, "plan_horizon_s": 8.0, "map": m,
           "ego_log": ego, "agents": list(agents), "instruction": {"goal": goal}}
    if text:
        doc["instruction"]["free_text"] = text
    return doc


def stopping(stop_s, decel=2.0):
    def fn(t, s, v):
        if v <= 1e-9:
            return 0.0
        need = v * v / (2.0 * max(stop_s - s, 1e-3))
        return -need if need >= decel * 0.98 else 0.0
    return fn


def build():
    road = straight()
    path = Path(road)
    out = {}

    out["straight_road"] = scenario(
        "straight_road", road, ego_log(path, profile(10.0, 12.0, lambda t, s, v: 0.0)), limit=12.0,
        text="Follow the lane.")

    stop_line = 120.0
    red = profile(10.0, 10.0, stopping(stop_line - 1.0 - EGO_HALF_LENGTH))
    out["red_light"] = scenario(
        "red_light", road, ego_log(path, red), light="red", stop_line=stop_line, limit=10.0,
        text="Stop for the signal.")
    out["green_light"] = scenario(
        "green_light", road, ego_log(path, profile(10.0, 10.0, lambda t, s, v: 0.0)), light="green",
        stop_line=stop_line, limit=10.0, text="Stop for the signal.")

    def follow(t, s, v):
        lead_s = 45.0 + 8.0 * t
        gap = lead_s - s - 4.65
        return max(-3.0, min(1.0, 0.5 * (gap - (2.0 + 1.5 * v)) + 0.8 * (8.0 - v)))
    out["lead_vehicle"] = scenario(
        "lead_vehicle", road, ego_log(path, profile(10.0, 12.0, follow)),
        agents=[lane_agent(path, "lead", 45.0, 8.0)], limit=12.0, text="Keep a safe distance.")

    # the pedestrian walks up to the kerb and halts 1.0 m from the ego's
    # lane-keeping footprint, waits, then walks back
    ped_x = 62.0
    ped_stop_y = -(1.0 + 1.0 + 0.3)
    ped = []
    for k in range(FRAMES):
        t = k * DT
        if t <= 10.0:
            y = min(-7.0 + 1.2 * t, ped_stop_y)
            v = 1.2 if y < ped_stop_y else 0.0
            yaw = math.pi / 2
        else:
            y = max(ped_stop_y - 1.2 * (t - 10.0), -7.0)
            v = 1.2 if y > -7.0 else 0.0
            yaw = -math.pi / 2
        ped.append((t, ped_x, y, yaw, v))
    ped_stop = profile(10.0, 8.0, stopping(ped_x - 0.3 - 3.0 - EGO_HALF_LENGTH, 1.5))
    go_t = 11.0
    ego = []
    s_hold = None
    for t, s, vv, a in ped_stop:
        if t < go_t:
            ego.append((t, s, vv, a))
            s_hold = s
        else:
            dt = t - go_t
            v = min(8.0, 1.0 * dt)
            ds = 0.5 * dt * dt if dt < 8.0 else 32.0 + 8.0 * (dt - 8.0)
            ego.append((t, s_hold + ds, v, 1.0 if dt < 8.0 else 0.0))
    out["crossing_pedestrian"] = scenario(
        "crossing_pedestrian", road, ego_log(path, ego), agents=[agent("ped_1", "pedestrian", 0.6, 0.6, ped)],
        limit=8.0, goal="yield", text="Yield to pedestrians.")

    curve = arc()
    cpath = Path(curve)
    out["gentle_curve"] = scenario(
        "gentle_curve", curve, ego_log(cpath, profile(5.0, 9.0, lambda t, s, v: 0.0)),
        agents=[lane_agent(cpath, "oncoming", 150.0, -9.0, offset=3.8)], limit=9.0)

    agents = []
    for i in range(16):
        agents.append(lane_agent(path, "left_%02d" % i, 5.0 + 14.0 * i, 11.0, offset=4.0))
        agents.append(lane_agent(path, "right_%02d" % i, 250.0 - 14.0 * i, -10.0, offset=-4.0))
    agents.append(lane_agent(path, "lead", 40.0, 10.0))
    for i in range(6):
        agents.append(lane_agent(path, "walker_%d" % i, 20.0 + 25.0 * i, 1.3, offset=7.5, category="pedestrian",
                                 length=0.6, width=0.6))
    agents.append(lane_agent(path, "late_cyclist", 30.0, 5.0, offset=-7.0, category="cyclist", length=1.8,
                             width=0.7, t_from=5.0, t_to=14.0))

    def dense(t, s, v):
        gap = 40.0 + 10.0 * t - s - 4.65
        return max(-3.0, min(1.0, 0.5 * (gap - (2.0 + 1.5 * v)) + 0.8 * (10.0 - v)))
    out["dense_traffic"] = scenario(
        "dense_traffic", road, ego_log(path, profile(5.0, 10.0, dense)), agents=agents, limit=10.0)
    return out


def write(path, doc):
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="scenarios")
    ap.add_argument("--bad", default="tests/data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    os.makedirs(args.bad, exist_ok=True)
    docs = build()
    for sid, doc in docs.items():
        write(os.path.join(args.out, sid + ".json"), doc)

    bad = json.loads(json.dumps(docs["straight_road"]))
    bad["id"] = "nonuniform"
    bad["ego_log"][5]["t"] += 0.1
    write(os.path.join(args.bad, "nonuniform_frames.json"), bad)

    bad = json.loads(json.dumps(docs["straight_road"]))
    bad["id"] = "unknown_key"
    bad["map"]["lane_colour"] = "grey"
    write(os.path.join(args.bad, "unknown_key.json"), bad)

    with open(os.path.join(args.bad, "malformed.json"), "w") as f:
        f.write('{"id": "broken", "resolution_s": 0.5, "map": {')


if __name__ == "__main__":
    main()
