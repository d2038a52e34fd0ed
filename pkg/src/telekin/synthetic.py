"""Synthetic operator episodes: scripted input streams for tests and goldens.

Two generators live here:

* :func:`scripted_frames` builds the fixed 60-second reference episode from
  closed-form trajectories and a hand-written button schedule.  It uses no
  randomness at all, so the episode is a pure function of its duration and
  rates and exercises every mode transition, stick refinement, visibility
  toggles, grip changes, a workspace-clamp excursion, and a re-engage during
  recovery.
* :func:`random_episode` builds seeded random episodes (smooth band-limited
  hand motion, random press schedules) for property suites that need many
  distinct runs.

Both emit wire-level frames with exact microsecond timestamps, merged into
one monotone stream the trace layer can store directly.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import quat_from_axis_angle, quat_multiply, quat_normalize
from .retargeting import ArmSide, SIDES
from .transport import ControllerFrame, PoseFrame

__all__ = [
    "hand_position",
    "hand_orientation",
    "controller_signals",
    "scripted_frames",
    "random_episode",
]

# Button schedule for the scripted episode, in seconds.
# The 43.5 press lands mid-recovery after the 43.0 release, re-engaging the
# stick from the interpolated orientation.
_HOLD_SPANS = ((5.0, 8.0), (20.0, 25.0), (40.0, 43.0), (43.5, 44.5))
_GRIP_SPANS = ((12.0, 18.0), (35.0, 36.0), (50.0, 55.0))
_VIS_PRESSES = (10.0, 10.5, 30.0, 52.0)  # 100 ms presses
_VIS_PRESS_LEN = 0.1


def _in_spans(t: float, spans) -> bool:
    return any(a <= t < b for a, b in spans)


def hand_position(side: ArmSide, t: float) -> np.ndarray:
    """Smooth, bounded wrist path relative to the shoulder, in meters."""
    mirror = 1.0 if side is ArmSide.LEFT else -1.0
    x = 0.28 + 0.10 * math.sin(2.0 * math.pi * 0.10 * t)
    y = mirror * (0.15 + 0.08 * math.cos(2.0 * math.pi * 0.13 * t))
    z = 0.05 * math.sin(2.0 * math.pi * 0.07 * t + (0.0 if mirror > 0 else 1.1))
    # Brief reach excursion around t = 28 s; scaled through the workspace
    # ratio this leaves the robot sphere and exercises clamping.
    x += 0.42 * math.exp(-((t - 28.0) / 0.5) ** 2)
    return np.array([x, y, z])


def hand_orientation(side: ArmSide, t: float) -> np.ndarray:
    """Slowly wandering wrist orientation, unit quaternion (w, x, y, z)."""
    phase = 0.0 if side is ArmSide.LEFT else 0.8
    axis = np.array([1.0,
                     0.6 * math.sin(2.0 * math.pi * 0.04 * t + phase),
                     0.4 * math.cos(2.0 * math.pi * 0.03 * t)])
    angle = 0.8 * math.sin(2.0 * math.pi * 0.06 * t + phase)
    twist = quat_from_axis_angle(np.array([0.0, 0.0, 1.0]),
                                 0.5 * math.sin(2.0 * math.pi * 0.02 * t))
    return quat_multiply(quat_from_axis_angle(axis, angle), twist)


def controller_signals(side: ArmSide, t: float) -> tuple:
    """(mode_hold, vis_toggle, grip, u1, u2) at time ``t`` for ``side``."""
    hold = _in_spans(t, _HOLD_SPANS)
    grip = _in_spans(t, _GRIP_SPANS)
    vis = any(p <= t < p + _VIS_PRESS_LEN for p in _VIS_PRESSES)
    if side is ArmSide.RIGHT:
        # Right arm holds on a shifted schedule so the arms are independent.
        hold = _in_spans(t - 1.0, _HOLD_SPANS[:2]) or _in_spans(t, _HOLD_SPANS[2:])
        vis = any(p + 0.2 <= t < p + 0.2 + _VIS_PRESS_LEN for p in _VIS_PRESSES)
    if hold:
        u1 = 0.9 * math.sin(2.0 * math.pi * 0.5 * t)
        u2 = 0.7 * math.cos(2.0 * math.pi * 0.3 * t)
    else:
        # Sticks wiggle outside holds too; every mapping but the stick-driven
        # one must ignore this.
        u1 = 0.3 * math.sin(2.0 * math.pi * 0.2 * t)
        u2 = 0.05 * math.cos(2.0 * math.pi * 0.4 * t)
    return hold, vis, grip, u1, u2


def _f32(v: float) -> float:
    return float(np.float32(v))


def scripted_frames(duration_s: float = 60.0, pose_hz: int = 60,
                    ctrl_hz: int = 50) -> list:
    """The deterministic reference episode as one monotone frame stream."""
    frames = []
    n_pose = int(round(duration_s * pose_hz))
    n_ctrl = int(round(duration_s * ctrl_hz))
    for k in range(1, n_pose + 1):
        t = k / pose_hz
        t_us = (k * 1_000_000) // pose_hz
        for side in SIDES:
            q = hand_orientation(side, t)
            frames.append(PoseFrame(side, t_us,
                                    tuple(float(v) for v in hand_position(side, t)),
                                    tuple(float(v) for v in q)))
    for k in range(1, n_ctrl + 1):
        t = k / ctrl_hz
        t_us = (k * 1_000_000) // ctrl_hz
        for side in SIDES:
            hold, vis, grip, u1, u2 = controller_signals(side, t)
            frames.append(ControllerFrame(side, t_us, hold, vis, grip,
                                          _f32(u1), _f32(u2)))
    # Stable merge: by timestamp, poses before controller frames on ties.
    frames.sort(key=lambda f: (f.t_us, 0 if isinstance(f, PoseFrame) else 1))
    return frames


def _band_limited(rng: np.random.Generator, n_terms: int = 4):
    """A smooth scalar function of time from a few random Fourier terms."""
    amps = rng.uniform(-1.0, 1.0, n_terms)
    freqs = rng.uniform(0.05, 0.6, n_terms)
    phases = rng.uniform(0.0, 2.0 * math.pi, n_terms)

    def f(t: float) -> float:
        return float(sum(a * math.sin(2.0 * math.pi * fr * t + ph)
                         for a, fr, ph in zip(amps, freqs, phases)))

    return f


def random_episode(rng: np.random.Generator, duration_s: float = 4.0,
                   pose_hz: int = 60, ctrl_hz: int = 50,
                   hold_spans: tuple | None = None) -> list:
    """A seeded random episode: smooth motion, random press schedule."""
    pos_f = {s: [_band_limited(rng) for _ in range(3)] for s in SIDES}
    ang_f = {s: _band_limited(rng) for s in SIDES}
    axis = {s: rng.uniform(-1.0, 1.0, 3) + np.array([1.5, 0.0, 0.0]) for s in SIDES}
    stick_f = {s: (_band_limited(rng), _band_limited(rng)) for s in SIDES}

    if hold_spans is None:
        spans = []
        t = float(rng.uniform(0.3, 0.9))
        while t < duration_s - 0.5:
            press = float(rng.uniform(0.2, 1.2))
            spans.append((t, min(t + press, duration_s - 0.2)))
            t += press + float(rng.uniform(0.3, 1.5))
        hold_spans = tuple(spans)

    def position(side: ArmSide, t: float) -> tuple:
        base = np.array([0.3, 0.15 if side is ArmSide.LEFT else -0.15, 0.0])
        wiggle = np.array([0.08 * f(t) for f in pos_f[side]])
        return tuple(float(v) for v in base + wiggle)

    def orientation(side: ArmSide, t: float) -> tuple:
        q = quat_from_axis_angle(axis[side], 0.7 * ang_f[side](t))
        return tuple(float(v) for v in quat_normalize(q))

    frames = []
    n_pose = int(round(duration_s * pose_hz))
    n_ctrl = int(round(duration_s * ctrl_hz))
    for k in range(1, n_pose + 1):
        t = k / pose_hz
        t_us = (k * 1_000_000) // pose_hz
        for side in SIDES:
            frames.append(PoseFrame(side, t_us, position(side, t),
                                    orientation(side, t)))
    for k in range(1, n_ctrl + 1):
        t = k / ctrl_hz
        t_us = (k * 1_000_000) // ctrl_hz
        hold = _in_spans(t, hold_spans)
        for side in SIDES:
            f1, f2 = stick_f[side]
            frames.append(ControllerFrame(
                side, t_us, hold, False, False,
                _f32(max(-1.0, min(1.0, 0.8 * f1(t)))),
                _f32(max(-1.0, min(1.0, 0.6 * f2(t))))))
    frames.sort(key=lambda f: (f.t_us, 0 if isinstance(f, PoseFrame) else 1))
    return frames
