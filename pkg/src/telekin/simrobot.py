"""Kinematic robot stand-in: end effectors chase commands under rate limits.

There are no dynamics.  Each arm's actual pose moves toward its latest
command along the straight segment at up to ``v_max`` and rotates toward the
commanded orientation at up to ``omega_max``, integrated in fixed-rate inner
substeps so a slow outer tick cannot overshoot the limits.  Positions are
re-clamped to the reachable sphere after every substep.

Scene snapshots are immutable, serializable views of the state used by the
operator console; their frame counter advances at the synthetic video rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import Pose, identity_quat, slerp_step
from .retargeting import ArmSide, EndEffectorCommand, SIDES
from .workspace import WorkspaceSphere, clamp_to_sphere

__all__ = [
    "SCENE_RATE_HZ",
    "TrackingParams",
    "ArmState",
    "SimRobotState",
    "SceneSnapshot",
    "initial_state",
    "step",
    "step_exact",
    "scene_snapshot",
]

SCENE_RATE_HZ = 15


@dataclass(frozen=True)
class TrackingParams:
    """Rate limits for command tracking."""

    v_max: float = 1.0  # m/s straight-line speed cap
    omega_max: float = math.pi  # rad/s rotation speed cap
    inner_rate: int = 500  # Hz; substep density of the inner loop

    def __post_init__(self):
        if not (self.v_max > 0 and self.omega_max > 0 and self.inner_rate > 0):
            raise ValueError("tracking params must all be > 0")


@dataclass(frozen=True, eq=False)
class ArmState:
    actual_pose: Pose
    gripper_closed: bool = False


@dataclass(frozen=True, eq=False)
class SimRobotState:
    """Full robot state; the engine loop is the sole writer."""

    arms: dict  # ArmSide -> ArmState
    neck_to_head: np.ndarray
    sim_time: Fraction = Fraction(0)

    @property
    def sim_time_s(self) -> float:
        return float(self.sim_time)


def initial_state(neck_to_head: np.ndarray,
                  rest_position: np.ndarray | None = None) -> SimRobotState:
    rest = np.array([0.4, 0.0, 0.0]) if rest_position is None else np.asarray(rest_position, dtype=float)
    arms = {s: ArmState(Pose(rest.copy(), identity_quat())) for s in SIDES}
    return SimRobotState(arms=arms, neck_to_head=np.asarray(neck_to_head, dtype=float))


def _track_arm(arm: ArmState, cmd: EndEffectorCommand, params: TrackingParams,
               sphere: WorkspaceSphere, dt: float) -> ArmState:
    substeps = max(1, math.ceil(dt * params.inner_rate))
    sub_dt = dt / substeps
    position = arm.actual_pose.position.copy()
    orientation = arm.actual_pose.orientation
    max_step = params.v_max * sub_dt
    for _ in range(substeps):
        delta = cmd.position - position
        dist = float(np.linalg.norm(delta))
        if dist <= max_step:
            position = cmd.position.copy()
        elif dist > 0.0:
            position = position + delta * (max_step / dist)
        orientation, _ = slerp_step(orientation, cmd.orientation,
                                    params.omega_max, sub_dt)
        position, _ = clamp_to_sphere(position, sphere)
    return ArmState(Pose(position, orientation), cmd.grip_close)


def step(state: SimRobotState, commands: dict, params: TrackingParams,
         sphere: WorkspaceSphere, dt: float) -> SimRobotState:
    """Advance the robot by ``dt`` seconds toward the latest per-arm commands."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    arms = {side: _track_arm(state.arms[side], commands[side], params, sphere, dt)
            for side in SIDES}
    dt_exact = Fraction(dt).limit_denominator(10 ** 9)
    return SimRobotState(arms=arms, neck_to_head=state.neck_to_head,
                         sim_time=state.sim_time + dt_exact)


def step_exact(state: SimRobotState, commands: dict, params: TrackingParams,
               sphere: WorkspaceSphere, dt: Fraction) -> SimRobotState:
    """Like :func:`step` but with an exact rational ``dt`` for drift-free time."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    fdt = float(dt)
    arms = {side: _track_arm(state.arms[side], commands[side], params, sphere, fdt)
            for side in SIDES}
    return SimRobotState(arms=arms, neck_to_head=state.neck_to_head,
                         sim_time=state.sim_time + dt)


@dataclass(frozen=True, eq=False)
class SceneSnapshot:
    """Read-only scene description for rendering and telemetry."""

    frame_count: int
    sim_time_s: float
    arms: dict  # ArmSide -> {position, orientation, gripper_closed}
    neck_to_head: np.ndarray

    def to_dict(self) -> dict:
        return {
            "frame": self.frame_count,
            "sim_time": self.sim_time_s,
            "arms": {
                side.value: {
                    "position": [float(v) for v in data["position"]],
                    "orientation": [float(v) for v in data["orientation"]],
                    "gripper_closed": bool(data["gripper_closed"]),
                }
                for side, data in self.arms.items()
            },
            "camera": [[float(v) for v in row] for row in self.neck_to_head],
        }


def scene_snapshot(state: SimRobotState) -> SceneSnapshot:
    """Snapshot the state; the frame counter is the floor of elapsed video frames."""
    frame = int(state.sim_time * SCENE_RATE_HZ)  # exact: Fraction times int
    arms = {
        side: {
            "position": arm.actual_pose.position.copy(),
            "orientation": arm.actual_pose.orientation.copy(),
            "gripper_closed": arm.gripper_closed,
        }
        for side, arm in state.arms.items()
    }
    return SceneSnapshot(frame_count=frame, sim_time_s=state.sim_time_s,
                         arms=arms, neck_to_head=state.neck_to_head.copy())
