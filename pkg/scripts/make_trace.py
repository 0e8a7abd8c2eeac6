#!/usr/bin/env python3
"""Generate the shipped operator traces.

  traces/reach_and_place.trace  -- arm-only puzzle run: the hand tracker
      glides through the configured waypoints while the glove closes for the
      grasp and reopens at the end; feet stay in the idle area.
  traces/constant_v.trace       -- locomotion benchmark: left foot held
      0.10 m beyond the idle disc straight ahead for 5 s (0.2 m/s at the
      default gains), then back to nominal for 1 s.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from teleopsim.config import load_config
from teleopsim.kinematics import forward_kinematics
from teleopsim.locomotion import FootStance
from teleopsim.trace import OperatorTrace, TraceSample, save_trace

RATE_HZ = 100
SEGMENT_S = 2.0
GLOVE_CLOSED = 0.8


def smoothstep(u: float) -> float:
    u = min(1.0, max(0.0, u))
    return u * u * (3.0 - 2.0 * u)


def make_reach_and_place(config) -> OperatorTrace:
    avatar = config.avatar
    ee0 = forward_kinematics(avatar.chain, np.zeros(avatar.chain.n))[avatar.chain.n]
    path = [tuple(float(v) for v in ee0.pos)] + [tuple(wp) for wp in config.waypoints]
    idle = FootStance(tuple(avatar.locomotion.nominal_left),
                      tuple(avatar.locomotion.nominal_right))
    n_glove = avatar.glove_map.glove_joints
    scales = np.array([0.8 + 0.02 * j for j in range(n_glove)])

    # grasp closes while sinking onto the first bucket (segment 2) and
    # releases after settling on the second (during the final hold)
    grasp_start = 1 * SEGMENT_S
    grasp_end = 2 * SEGMENT_S
    samples: list[TraceSample] = []
    n_segments = len(path) - 1
    hold_s = 1.5
    total_s = n_segments * SEGMENT_S + hold_s
    release_start = n_segments * SEGMENT_S + 0.2
    release_end = release_start + 1.0

    n = int(round(total_s * RATE_HZ))
    for i in range(n):
        t = i / RATE_HZ
        seg = min(int(t // SEGMENT_S), n_segments - 1)
        u = smoothstep((t - seg * SEGMENT_S) / SEGMENT_S) if t < n_segments * SEGMENT_S else 1.0
        a = np.array(path[seg])
        b = np.array(path[seg + 1])
        pos = a + (b - a) * u
        if t < grasp_start:
            close = 0.0
        elif t < grasp_end:
            close = smoothstep((t - grasp_start) / (grasp_end - grasp_start))
        elif t < release_start:
            close = 1.0
        elif t < release_end:
            close = 1.0 - smoothstep((t - release_start) / (release_end - release_start))
        else:
            close = 0.0
        glove = tuple(float(v) for v in (GLOVE_CLOSED * close) * scales)
        samples.append(TraceSample(t, idle, tuple(float(v) for v in pos), glove))
    return OperatorTrace(tuple(samples))


def make_constant_v(config, push_s: float = 5.0, idle_s: float = 1.0) -> OperatorTrace:
    avatar = config.avatar
    loco = avatar.locomotion
    ee0 = forward_kinematics(avatar.chain, np.zeros(avatar.chain.n))[avatar.chain.n]
    hand = tuple(float(v) for v in ee0.pos)
    nominal_l = tuple(loco.nominal_left)
    nominal_r = tuple(loco.nominal_right)
    # left foot straight ahead, 0.10 m beyond the disc edge
    forward_l = (nominal_l[0] + loco.idle_radius + 0.10, nominal_l[1])
    glove = tuple(0.0 for _ in range(avatar.glove_map.glove_joints))
    samples = []
    n = int(round((push_s + idle_s) * RATE_HZ))
    for i in range(n):
        t = i / RATE_HZ
        p_left = forward_l if t < push_s else nominal_l
        samples.append(TraceSample(t, FootStance(p_left, nominal_r), hand, glove))
    return OperatorTrace(tuple(samples))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default="configs/bench.yaml")
    parser.add_argument("--out-dir", default="traces")
    args = parser.parse_args()
    config = load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_trace(make_reach_and_place(config), out / "reach_and_place.trace")
    save_trace(make_constant_v(config), out / "constant_v.trace")
    print(f"wrote {out}/reach_and_place.trace and {out}/constant_v.trace")


if __name__ == "__main__":
    main()
