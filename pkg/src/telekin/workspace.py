"""Spherical workspace models and the per-axis position scaling they induce.

Each arm's reachable set — human and robot alike — is approximated by a
sphere: origin at the shoulder (or arm base), radius equal to reach.  The
scaling vector maps human-side positions into robot-side ones, stretching
the lateral axis when the robot's base separation demands it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidWorkspaceError",
    "WorkspaceSphere",
    "WorkspaceModel",
    "compute_scaling",
    "clamp_to_sphere",
]


class InvalidWorkspaceError(ValueError):
    """Workspace geometry with a non-positive radius or separation."""


def compute_scaling(human_reach: float, human_gap: float,
                    robot_reach: float, robot_gap: float) -> np.ndarray:
    """Per-axis scaling from human hand space to robot command space.

    x and z scale by the reach ratio; the lateral y axis takes whichever is
    larger of the reach ratio and the base-separation ratio, so bimanual
    coverage is kept even when the robot bases sit wider than the shoulders.
    """
    for name, v in (("human_reach", human_reach), ("human_gap", human_gap),
                    ("robot_reach", robot_reach), ("robot_gap", robot_gap)):
        if not (v > 0.0):
            raise InvalidWorkspaceError(f"{name} must be > 0, got {v!r}")
    ratio = robot_reach / human_reach
    return np.array([ratio, max(ratio, robot_gap / human_gap), ratio])


@dataclass(frozen=True, eq=False)
class WorkspaceSphere:
    origin: np.ndarray
    radius: float

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float)
        if o.shape != (3,) or not np.all(np.isfinite(o)):
            raise InvalidWorkspaceError("sphere origin must be a finite 3-vector")
        if not (self.radius > 0.0):
            raise InvalidWorkspaceError(f"sphere radius must be > 0, got {self.radius!r}")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True)
class WorkspaceModel:
    """Human and robot sphere parameters; scaling is derived, never stored."""

    human_reach: float
    human_shoulder_separation: float
    robot_reach: float
    robot_base_separation: float

    def __post_init__(self):
        # Validates eagerly; the derived vector is recomputed on access so it
        # can never go stale.
        compute_scaling(self.human_reach, self.human_shoulder_separation,
                        self.robot_reach, self.robot_base_separation)

    @property
    def scaling(self) -> np.ndarray:
        return compute_scaling(self.human_reach, self.human_shoulder_separation,
                               self.robot_reach, self.robot_base_separation)

    @property
    def robot_sphere(self) -> WorkspaceSphere:
        # Commands live in each arm's base frame, so the reachable sphere is
        # centered at that frame's origin.
        return WorkspaceSphere(np.zeros(3), self.robot_reach)


def clamp_to_sphere(p, sphere: WorkspaceSphere) -> tuple[np.ndarray, bool]:
    """Project ``p`` radially onto the sphere if it lies outside.

    Returns ``(point, clamped)``; interior points pass through untouched.
    """
    p = np.asarray(p, dtype=float)
    d = p - sphere.origin
    n = float(np.linalg.norm(d))
    if n <= sphere.radius:
        return p, False
    return sphere.origin + d * (sphere.radius / n), True
