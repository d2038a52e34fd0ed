"""Run metrics: motion totals and interaction counters for a session.

Path length and rotation travel integrate command-to-command deltas, so
they are additive when traces are concatenated.  Joystick-active time sums
over both arms (two arms refined simultaneously count double, by design).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import geodesic_distance
from .retargeting import Mode, RetargetState, SIDES

__all__ = ["MetricsAccumulator", "MetricsReport"]


@dataclass(frozen=True)
class MetricsReport:
    completion_time_s: float
    path_length_m: dict  # arm side value -> meters
    rotation_travel_rad: dict  # arm side value -> radians
    mode_switch_count: int
    joystick_active_time_s: float
    clamp_count: int
    visibility_toggles: int
    success: bool | None = None  # None when no goal is configured

    def __post_init__(self):
        scalars = [self.completion_time_s, self.joystick_active_time_s,
                   float(self.mode_switch_count), float(self.clamp_count),
                   float(self.visibility_toggles)]
        scalars += list(self.path_length_m.values())
        scalars += list(self.rotation_travel_rad.values())
        if any(v < 0 for v in scalars):
            raise ValueError("metrics must be non-negative")

    def to_dict(self) -> dict:
        return {
            "completion_time_s": self.completion_time_s,
            "path_length_m": dict(self.path_length_m),
            "rotation_travel_rad": dict(self.rotation_travel_rad),
            "mode_switch_count": self.mode_switch_count,
            "joystick_active_time_s": self.joystick_active_time_s,
            "clamp_count": self.clamp_count,
            "visibility_toggles": self.visibility_toggles,
            "success": self.success,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


class MetricsAccumulator:
    """Mutable tallies owned by one engine; snapshot via :meth:`report`."""

    def __init__(self):
        self.path_length = {s: 0.0 for s in SIDES}
        self.rotation_travel = {s: 0.0 for s in SIDES}
        self.joystick_active_time = 0.0
        self.clamp_count = 0
        self.visibility_toggles = 0
        self.mode_switch_count = 0

    def observe_tick(self, commands: dict, prev_commands: dict,
                     state: RetargetState, dt: float) -> None:
        for side in SIDES:
            cmd = commands[side]
            prev = prev_commands.get(side)
            if prev is not None:
                self.path_length[side] += float(
                    np.linalg.norm(cmd.position - prev.position))
                self.rotation_travel[side] += geodesic_distance(
                    prev.orientation, cmd.orientation)
            if cmd.clamped:
                self.clamp_count += 1
            if state.arm(side).mode is Mode.JOYSTICK_ASSISTED:
                self.joystick_active_time += dt
        self.mode_switch_count = state.mode_switch_count

    def report(self, completion_time_s: float,
               success: bool | None = None) -> MetricsReport:
        return MetricsReport(
            completion_time_s=completion_time_s,
            path_length_m={s.value: self.path_length[s] for s in SIDES},
            rotation_travel_rad={s.value: self.rotation_travel[s] for s in SIDES},
            mode_switch_count=self.mode_switch_count,
            joystick_active_time_s=self.joystick_active_time,
            clamp_count=self.clamp_count,
            visibility_toggles=self.visibility_toggles,
            success=success,
        )
