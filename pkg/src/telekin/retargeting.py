"""Coarse-to-fine retargeting: hand poses + controller signals -> arm commands.

Each arm runs an independent three-state automaton:

* ``NATURAL`` — continuous mapping: position is scaled componentwise and
  moved into the arm-base frame, orientation is the composed alignment of
  the live hand orientation.
* ``JOYSTICK_ASSISTED`` — entered while the mode-hold button is down.  The
  orientation captured at entry is refined incrementally by the thumbstick
  (horizontal deflection spins about the approach axis, vertical deflection
  pitches); position keeps following the natural mapping.
* ``RECOVERING`` — after release, the held orientation is marched back to
  the live hand-derived target at a fixed angular rate, and snaps to natural
  alignment once within the termination threshold.

Two baseline behaviors share the plumbing: ``natural_tick`` (mapping only,
controller ignored except the gripper) and ``relative_tick`` (trigger-gated
deltas from the pose at engagement, frozen while disengaged).

All state lives in :class:`RetargetState`; the functions here are the only
writers and are meant to be driven from a single engine loop.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    Pose,
    geodesic_distance,
    identity_quat,
    matrix_from_quat,
    quat_about_y,
    quat_about_z,
    quat_conjugate,
    quat_from_matrix,
    quat_multiply,
    slerp_step,
    vec3,
)
from .workspace import WorkspaceModel, clamp_to_sphere

__all__ = [
    "ArmSide",
    "Mode",
    "HandPoseSample",
    "ControllerState",
    "ArmTransform",
    "RigConfig",
    "EndEffectorCommand",
    "ArmRetargetState",
    "RetargetState",
    "apply_deadzone",
    "natural_position",
    "natural_orientation",
    "joystick_update",
    "recovery_step",
    "tick",
    "natural_tick",
    "relative_tick",
]


class ArmSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


SIDES = (ArmSide.LEFT, ArmSide.RIGHT)


class Mode(enum.Enum):
    NATURAL = "natural"
    JOYSTICK_ASSISTED = "joystick"
    RECOVERING = "recovering"


@dataclass(frozen=True, eq=False)
class HandPoseSample:
    """One tracked wrist pose, relative to that side's shoulder frame."""

    side: ArmSide
    pose: Pose
    t_us: int


@dataclass(frozen=True)
class ControllerState:
    """Latest controller sample for one side.

    ``mode_hold`` and ``vis_toggle`` are level signals; edge detection happens
    at the engine tick.  Deflections are clamped to [-1, 1] on construction.
    """

    side: ArmSide
    mode_hold: bool = False
    vis_toggle: bool = False
    u1: float = 0.0  # horizontal deflection
    u2: float = 0.0  # vertical deflection
    grip_close: bool = False
    t_us: int = 0

    def __post_init__(self):
        for name in ("u1", "u2"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, min(1.0, max(-1.0, v)))


@dataclass(frozen=True, eq=False)
class ArmTransform:
    """Rotation + translation taking shoulder-frame points to an arm base."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("arm transform needs a 3x3 rotation and 3-vector translation")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def apply(self, p: np.ndarray) -> np.ndarray:
        return self.rotation @ p + self.translation

    @staticmethod
    def identity() -> "ArmTransform":
        return ArmTransform(np.eye(3), np.zeros(3))


@dataclass(frozen=True, eq=False)
class RigConfig:
    """Calibration constants for the retargeting chain."""

    arm_base: dict  # ArmSide -> ArmTransform
    hand_to_gripper: np.ndarray  # alignment constant, hand frame -> gripper frame
    inplane_rate: float = 1.0  # rad/s at full horizontal deflection
    pitch_rate: float = 1.0  # rad/s at full vertical deflection
    recovery_rate: float = np.pi / 2  # rad/s while recovering
    recovery_threshold: float = 0.02  # rad; snap back to natural inside this
    deadzone: float = 0.08
    rest_position: np.ndarray = field(default_factory=lambda: vec3(0.4, 0.0, 0.0))
    stale_after_us: int = 250_000  # hand stream older than this freezes the arm

    def __post_init__(self):
        if set(self.arm_base) != set(SIDES):
            raise ValueError("arm_base must map both arm sides")
        if not (self.inplane_rate > 0 and self.pitch_rate > 0 and self.recovery_rate > 0):
            raise ValueError("rotation rates must be > 0")
        if not (0.0 < self.recovery_threshold < np.pi):
            raise ValueError("recovery_threshold must be in (0, pi)")
        if not (0.0 <= self.deadzone < 1.0):
            raise ValueError("deadzone must be in [0, 1)")
        object.__setattr__(self, "hand_to_gripper", np.asarray(self.hand_to_gripper, dtype=float))
        object.__setattr__(self, "rest_position", np.asarray(self.rest_position, dtype=float))

    @staticmethod
    def default() -> "RigConfig":
        return RigConfig(
            arm_base={s: ArmTransform.identity() for s in SIDES},
            hand_to_gripper=np.eye(3),
        )


@dataclass(frozen=True, eq=False)
class EndEffectorCommand:
    """One 7-DoF command: 3 position + 3 orientation DoF + gripper flag."""

    side: ArmSide
    position: np.ndarray
    orientation: np.ndarray
    grip_close: bool
    clamped: bool
    t_us: int


@dataclass
class ArmRetargetState:
    mode: Mode = Mode.NATURAL
    held_orientation: np.ndarray = field(default_factory=identity_quat)
    engage_t_us: int = 0
    prev_mode_hold: bool = False
    last_command: EndEffectorCommand | None = None
    stale: bool = False
    # relative-mode bookkeeping
    engaged: bool = False
    anchor_hand: Pose | None = None
    anchor_position: np.ndarray | None = None
    anchor_orientation: np.ndarray | None = None


@dataclass
class RetargetState:
    arms: dict = field(default_factory=lambda: {s: ArmRetargetState() for s in SIDES})
    mode_switch_count: int = 0

    def arm(self, side: ArmSide) -> ArmRetargetState:
        return self.arms[side]


def apply_deadzone(u: float, deadzone: float) -> float:
    """Zero small deflections, rescale the rest to keep the full [-1, 1] span."""
    if abs(u) <= deadzone:
        return 0.0
    return float(np.sign(u)) * (abs(u) - deadzone) / (1.0 - deadzone)


def natural_position(hand: HandPoseSample, ws: WorkspaceModel, rig: RigConfig) -> np.ndarray:
    """Scale the hand position componentwise, then move into the arm base frame."""
    scaled = ws.scaling * hand.pose.position
    return rig.arm_base[hand.side].apply(scaled)


def natural_orientation(hand: HandPoseSample, rig: RigConfig) -> np.ndarray:
    """Compose arm-base alignment, live hand rotation, and the gripper constant."""
    base = rig.arm_base[hand.side].rotation
    m = base @ matrix_from_quat(hand.pose.orientation) @ rig.hand_to_gripper
    return quat_from_matrix(m)


def joystick_update(arm: ArmRetargetState, ctrl: ControllerState, rig: RigConfig,
                    dt: float) -> np.ndarray:
    """One incremental refinement of the held orientation.

    Right-multiplies pitch then in-plane rotation, so both act in the gripper's
    own frame and the approach axis is preserved whenever the vertical
    deflection is zero.
    """
    th1 = rig.inplane_rate * apply_deadzone(ctrl.u1, rig.deadzone) * dt
    th2 = rig.pitch_rate * apply_deadzone(ctrl.u2, rig.deadzone) * dt
    q = quat_multiply(quat_multiply(arm.held_orientation, quat_about_y(th2)),
                      quat_about_z(th1))
    arm.held_orientation = q
    return q


def recovery_step(arm: ArmRetargetState, hand: HandPoseSample, rig: RigConfig,
                  dt: float) -> tuple[np.ndarray, bool]:
    """One constant-rate step back toward the live hand-derived target.

    The target is recomputed every call (the hand keeps moving).  Done when
    the remaining distance is inside the termination threshold, at which point
    the natural alignment is returned outright.
    """
    target = natural_orientation(hand, rig)
    if geodesic_distance(arm.held_orientation, target) <= rig.recovery_threshold:
        arm.held_orientation = target
        return target, True
    q, reached = slerp_step(arm.held_orientation, target, rig.recovery_rate, dt)
    arm.held_orientation = q
    return q, reached


def _retime(cmd: EndEffectorCommand, t_us: int, grip: bool | None) -> EndEffectorCommand:
    return replace(cmd, t_us=t_us,
                   grip_close=cmd.grip_close if grip is None else grip)


def _rest_command(side: ArmSide, rig: RigConfig, t_us: int) -> EndEffectorCommand:
    return EndEffectorCommand(side, rig.rest_position.copy(), identity_quat(),
                              False, False, t_us)


def _hand_is_stale(hand: HandPoseSample | None, rig: RigConfig, now_us: int) -> bool:
    return hand is None or (now_us - hand.t_us) > rig.stale_after_us


def tick(hands: dict, ctrls: dict, state: RetargetState, ws: WorkspaceModel,
         rig: RigConfig, dt: float, now_us: int) -> dict:
    """Advance the coarse-to-fine automaton one step for both arms.

    ``hands`` and ``ctrls`` hold the latest sample per side (sample-and-hold;
    ``None`` when a stream has produced nothing yet).  Returns exactly one
    command per arm.  A stale hand stream repeats the arm's last command with
    the state's stale flag raised — never extrapolates.
    """
    out = {}
    for side in SIDES:
        arm = state.arm(side)
        hand = hands.get(side)
        ctrl = ctrls.get(side)
        grip = ctrl.grip_close if ctrl is not None else None

        if _hand_is_stale(hand, rig, now_us):
            arm.stale = True
            prev = arm.last_command or _rest_command(side, rig, now_us)
            cmd = _retime(prev, now_us, grip)
            arm.last_command = cmd
            out[side] = cmd
            continue
        arm.stale = False

        hold = ctrl.mode_hold if ctrl is not None else False
        rising = hold and not arm.prev_mode_hold
        falling = (not hold) and arm.prev_mode_hold
        arm.prev_mode_hold = hold

        position, clamped = clamp_to_sphere(natural_position(hand, ws, rig),
                                            ws.robot_sphere)

        before = arm.mode
        if arm.mode is Mode.NATURAL:
            if rising:
                # Capture the orientation currently being commanded, not a
                # recomputed one: the boundary tick must be bit-identical.
                arm.held_orientation = (
                    arm.last_command.orientation if arm.last_command is not None
                    else natural_orientation(hand, rig))
                arm.mode = Mode.JOYSTICK_ASSISTED
                arm.engage_t_us = now_us
                orientation = arm.held_orientation
            else:
                orientation = natural_orientation(hand, rig)
        elif arm.mode is Mode.JOYSTICK_ASSISTED:
            if falling:
                arm.mode = Mode.RECOVERING
                orientation, done = recovery_step(arm, hand, rig, dt)
                if done:
                    arm.mode = Mode.NATURAL
            else:
                orientation = joystick_update(arm, ctrl, rig, dt)
        else:  # Mode.RECOVERING
            if rising:
                # Re-engage from the current interpolated orientation.
                arm.mode = Mode.JOYSTICK_ASSISTED
                arm.engage_t_us = now_us
                orientation = arm.held_orientation
            else:
                orientation, done = recovery_step(arm, hand, rig, dt)
                if done:
                    arm.mode = Mode.NATURAL
        if arm.mode is not before:
            state.mode_switch_count += 1

        cmd = EndEffectorCommand(side, position, orientation,
                                 bool(grip) if grip is not None else False,
                                 clamped, now_us)
        arm.last_command = cmd
        out[side] = cmd
    return out


def natural_tick(hands: dict, ctrls: dict, state: RetargetState, ws: WorkspaceModel,
                 rig: RigConfig, dt: float, now_us: int) -> dict:
    """Mapping-only baseline: the controller is ignored except for the gripper."""
    out = {}
    for side in SIDES:
        arm = state.arm(side)
        hand = hands.get(side)
        ctrl = ctrls.get(side)
        grip = ctrl.grip_close if ctrl is not None else None

        if _hand_is_stale(hand, rig, now_us):
            arm.stale = True
            prev = arm.last_command or _rest_command(side, rig, now_us)
            cmd = _retime(prev, now_us, grip)
        else:
            arm.stale = False
            position, clamped = clamp_to_sphere(natural_position(hand, ws, rig),
                                                ws.robot_sphere)
            cmd = EndEffectorCommand(side, position, natural_orientation(hand, rig),
                                     bool(grip) if grip is not None else False,
                                     clamped, now_us)
        arm.last_command = cmd
        out[side] = cmd
    return out


def relative_tick(hands: dict, ctrls: dict, state: RetargetState, ws: WorkspaceModel,
                  rig: RigConfig, dt: float, now_us: int) -> dict:
    """Trigger-gated baseline: deltas from the pose at engagement.

    While disengaged the pose command is frozen.  On engagement the current
    hand pose and the current command become anchors; position then moves by
    the scaled hand delta and orientation by the relative hand rotation.
    """
    out = {}
    for side in SIDES:
        arm = state.arm(side)
        hand = hands.get(side)
        ctrl = ctrls.get(side)
        grip = ctrl.grip_close if ctrl is not None else None

        if _hand_is_stale(hand, rig, now_us):
            arm.stale = True
            prev = arm.last_command or _rest_command(side, rig, now_us)
            cmd = _retime(prev, now_us, grip)
            arm.last_command = cmd
            out[side] = cmd
            continue
        arm.stale = False

        hold = ctrl.mode_hold if ctrl is not None else False
        rising = hold and not arm.prev_mode_hold
        falling = (not hold) and arm.prev_mode_hold
        arm.prev_mode_hold = hold

        if rising:
            base = arm.last_command or _rest_command(side, rig, now_us)
            arm.engaged = True
            arm.anchor_hand = hand.pose
            arm.anchor_position = base.position.copy()
            arm.anchor_orientation = base.orientation.copy()
            arm.engage_t_us = now_us
        elif falling:
            arm.engaged = False

        if arm.engaged:
            delta = hand.pose.position - arm.anchor_hand.position
            position, clamped = clamp_to_sphere(
                arm.anchor_position + ws.scaling * delta, ws.robot_sphere)
            orientation = quat_multiply(
                quat_multiply(arm.anchor_orientation,
                              quat_conjugate(arm.anchor_hand.orientation)),
                hand.pose.orientation)
            cmd = EndEffectorCommand(side, position, orientation,
                                     bool(grip) if grip is not None else False,
                                     clamped, now_us)
        else:
            prev = arm.last_command or _rest_command(side, rig, now_us)
            cmd = _retime(prev, now_us, grip)
        arm.last_command = cmd
        out[side] = cmd
    return out
