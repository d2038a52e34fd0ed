"""Gripper-anchored placement of wrist-camera panels in the eye view.

The geometric chain, per (arm, eye) pair:

1. Take the commanded gripper position out of its arm-base frame into the
   world-aligned orientation, translate to the neck-base origin, rotate into
   the head frame, and translate to the eye.
2. Convert the right-handed camera frame to the left-handed virtual scene
   frame used by the renderer.
3. Project onto the wrist imaging plane, a virtual plane at the wrist focal
   length, by similar triangles.  The projected point is the anchor; the
   panel center sits a fixed in-plane offset away.

Everything here is a pure function over snapshots except the tiny bits of
state the engine loop owns: per-arm visibility flags (button edge-detected)
and the last valid anchor per pair, used when the gripper projects behind
the camera.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .retargeting import ArmSide, ControllerState, EndEffectorCommand, RigConfig, SIDES

__all__ = [
    "EyeSide",
    "PanelLayout",
    "BehindCameraError",
    "PerceptionConfig",
    "AnchorPlacement",
    "VisibilityState",
    "PlacementMemory",
    "gripper_in_eye",
    "to_virtual_frame",
    "anchor_project",
    "toggle_visibility",
    "place_panels",
]


class EyeSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


EYES = (EyeSide.LEFT, EyeSide.RIGHT)


class PanelLayout(enum.Enum):
    SITUATED = "situated"
    STATIC = "static"
    NONE = "none"


class BehindCameraError(ValueError):
    """Projection target is at or behind the virtual camera plane."""


def _default_neck_to_head() -> np.ndarray:
    # World x-forward / y-left / z-up into camera x-right / y-down / z-forward.
    return np.array([[0.0, -1.0, 0.0],
                     [0.0, 0.0, -1.0],
                     [1.0, 0.0, 0.0]])


def _default_arm_offsets() -> dict:
    return {ArmSide.LEFT: np.array([0.0, 0.19, -0.25]),
            ArmSide.RIGHT: np.array([0.0, -0.19, -0.25])}


def _default_eye_offsets() -> dict:
    # 63 mm interocular distance, split symmetrically about the head center.
    return {EyeSide.LEFT: np.array([0.0315, 0.0, 0.0]),
            EyeSide.RIGHT: np.array([-0.0315, 0.0, 0.0])}


def _default_camera_to_virtual() -> np.ndarray:
    # Right-handed y-down camera into the left-handed y-up scene frame.
    return np.diag([1.0, -1.0, 1.0])


def _default_static_anchors(wrist_focal: float) -> dict:
    # Lower corners of the view, one fixed slot per arm.
    return {ArmSide.LEFT: np.array([-0.45 * wrist_focal, -0.30 * wrist_focal, wrist_focal]),
            ArmSide.RIGHT: np.array([0.45 * wrist_focal, -0.30 * wrist_focal, wrist_focal])}


@dataclass(frozen=True, eq=False)
class PerceptionConfig:
    """Frame chain constants and panel layout policy.

    ``camera_to_virtual`` may be a reflection (determinant -1): it converts
    handedness.  All other rotations must be proper.
    """

    neck_to_head: np.ndarray = field(default_factory=_default_neck_to_head)
    arm_to_neck_offset: dict = field(default_factory=_default_arm_offsets)
    eye_offset: dict = field(default_factory=_default_eye_offsets)
    camera_to_virtual: np.ndarray = field(default_factory=_default_camera_to_virtual)
    eye_focal: float = 1.0
    wrist_focal: float = 0.6
    panel_offset: np.ndarray | None = None
    panel_scale: float = 0.35
    layout: PanelLayout = PanelLayout.SITUATED
    behind_eps: float = 1e-4
    static_anchors: dict | None = None

    def __post_init__(self):
        if not (0.0 < self.wrist_focal < self.eye_focal):
            raise ValueError("wrist focal length must satisfy 0 < wrist < eye")
        if not self.panel_scale > 0:
            raise ValueError("panel_scale must be > 0")
        ntm = np.asarray(self.neck_to_head, dtype=float)
        c2v = np.asarray(self.camera_to_virtual, dtype=float)
        for name, m in (("neck_to_head", ntm), ("camera_to_virtual", c2v)):
            if m.shape != (3, 3) or not np.all(np.isfinite(m)):
                raise ValueError(f"{name} must be a finite 3x3 matrix")
            if not np.allclose(m.T @ m, np.eye(3), atol=1e-6):
                raise ValueError(f"{name} must be orthonormal")
        if np.linalg.det(ntm) < 0:
            raise ValueError("neck_to_head must be a proper rotation")
        if abs(abs(np.linalg.det(c2v)) - 1.0) > 1e-6:
            raise ValueError("camera_to_virtual must have unit determinant magnitude")
        object.__setattr__(self, "neck_to_head", ntm)
        object.__setattr__(self, "camera_to_virtual", c2v)
        if set(self.arm_to_neck_offset) != set(SIDES):
            raise ValueError("arm_to_neck_offset must map both arm sides")
        if set(self.eye_offset) != set(EYES):
            raise ValueError("eye_offset must map both eye sides")
        object.__setattr__(self, "arm_to_neck_offset",
                           {k: np.asarray(v, dtype=float) for k, v in self.arm_to_neck_offset.items()})
        object.__setattr__(self, "eye_offset",
                           {k: np.asarray(v, dtype=float) for k, v in self.eye_offset.items()})
        off = self.panel_offset
        if off is None:
            off = np.array([0.06 * self.wrist_focal, 0.04 * self.wrist_focal])
        off = np.asarray(off, dtype=float)
        if off.shape != (2,):
            raise ValueError("panel_offset must be a 2-vector")
        object.__setattr__(self, "panel_offset", off)
        anchors = self.static_anchors
        if anchors is None:
            anchors = _default_static_anchors(self.wrist_focal)
        if set(anchors) != set(SIDES):
            raise ValueError("static_anchors must map both arm sides")
        object.__setattr__(self, "static_anchors",
                           {k: np.asarray(v, dtype=float) for k, v in anchors.items()})


@dataclass(frozen=True, eq=False)
class AnchorPlacement:
    """Where one wrist-view panel sits in one eye's virtual plane."""

    arm: ArmSide
    eye: EyeSide
    anchor: np.ndarray
    panel_center: np.ndarray
    panel_scale: float
    visible: bool
    fallback: bool = False  # True when the gripper projected behind the camera


@dataclass(frozen=True)
class VisibilityState:
    """Per-arm panel visibility plus the button memory for edge detection."""

    visible: dict = field(default_factory=lambda: {s: False for s in SIDES})
    prev_press: dict = field(default_factory=lambda: {s: False for s in SIDES})


@dataclass
class PlacementMemory:
    """Last valid anchor per (arm, eye), the behind-camera fallback."""

    last_anchor: dict = field(default_factory=dict)

    def get(self, arm: ArmSide, eye: EyeSide, pc: PerceptionConfig) -> np.ndarray:
        key = (arm, eye)
        if key not in self.last_anchor:
            self.last_anchor[key] = np.array([0.0, 0.0, pc.wrist_focal])
        return self.last_anchor[key]

    def put(self, arm: ArmSide, eye: EyeSide, anchor: np.ndarray) -> None:
        self.last_anchor[(arm, eye)] = anchor


def gripper_in_eye(cmd_position: np.ndarray, arm: ArmSide, eye: EyeSide,
                   rig: RigConfig, pc: PerceptionConfig) -> np.ndarray:
    """Express an arm-base gripper position in the given eye's camera frame."""
    world_aligned = rig.arm_base[arm].rotation.T @ np.asarray(cmd_position, dtype=float)
    return (pc.neck_to_head @ (world_aligned + pc.arm_to_neck_offset[arm])
            + pc.eye_offset[eye])


def to_virtual_frame(p_eye: np.ndarray, pc: PerceptionConfig) -> np.ndarray:
    """Convert an eye-frame point into the renderer's virtual scene frame."""
    return pc.camera_to_virtual @ np.asarray(p_eye, dtype=float)


def anchor_project(p_u: np.ndarray, pc: PerceptionConfig) -> np.ndarray:
    """Project onto the wrist imaging plane by similar triangles.

    The result always lies on the plane z = wrist focal length.  Points at or
    behind the guard depth raise :class:`BehindCameraError`.
    """
    x, y, z = (float(v) for v in np.asarray(p_u, dtype=float))
    if z <= pc.behind_eps:
        raise BehindCameraError(f"projection target depth {z} <= {pc.behind_eps}")
    f = pc.wrist_focal
    return np.array([x * f / z, y * f / z, f])


def toggle_visibility(vis: VisibilityState, ctrl: ControllerState) -> VisibilityState:
    """Flip one arm's panel flag on each rising edge of its toggle button."""
    visible = dict(vis.visible)
    prev = dict(vis.prev_press)
    side = ctrl.side
    if ctrl.vis_toggle and not prev[side]:
        visible[side] = not visible[side]
    prev[side] = ctrl.vis_toggle
    return VisibilityState(visible=visible, prev_press=prev)


def place_panels(commands: dict, vis: VisibilityState, pc: PerceptionConfig,
                 rig: RigConfig, memory: PlacementMemory) -> list:
    """Compute all four (arm, eye) placements for the current commands.

    Situated layout anchors each panel at the projected gripper; static layout
    pins fixed per-arm positions; the bare layout emits everything invisible.
    A behind-camera gripper freezes that pair at its last valid anchor.
    """
    placements = []
    for arm in SIDES:
        cmd: EndEffectorCommand = commands[arm]
        for eye in EYES:
            fallback = False
            if pc.layout is PanelLayout.STATIC:
                anchor = pc.static_anchors[arm].copy()
            else:
                try:
                    p_u = to_virtual_frame(
                        gripper_in_eye(cmd.position, arm, eye, rig, pc), pc)
                    anchor = anchor_project(p_u, pc)
                    memory.put(arm, eye, anchor)
                except BehindCameraError:
                    anchor = memory.get(arm, eye, pc).copy()
                    fallback = True
            center = anchor + np.array([pc.panel_offset[0], pc.panel_offset[1], 0.0])
            visible = (False if pc.layout is PanelLayout.NONE
                       else bool(vis.visible[arm]))
            placements.append(AnchorPlacement(arm, eye, anchor, center,
                                              pc.panel_scale, visible, fallback))
    return placements
