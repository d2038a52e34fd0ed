"""Engine configuration: schema, defaults, strict validation, hashing.

Config files are YAML.  Every value has a default, unknown keys anywhere in
the tree are rejected with their dotted path, and the fully resolved tree
can be dumped back out for inspection.  The resolved tree also yields a
stable content hash so traces can name the exact configuration that
produced them.

The two enum knobs select system variants: ``retarget_mode`` picks the
command mapping (the full coarse-to-fine automaton, the mapping-only
variant, or trigger-gated relative deltas) and ``layout`` picks how wrist
panels are placed (gripper-anchored, fixed grid, or hidden).
"""
from __future__ import annotations

import copy
import enum
import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import yaml

from .retargeting import ArmSide, ArmTransform, RigConfig, SIDES
from .situating import EYES, EyeSide, PanelLayout, PerceptionConfig
from .simrobot import TrackingParams
from .workspace import WorkspaceModel

__all__ = [
    "ConfigError",
    "RetargetMode",
    "Rates",
    "ListenConfig",
    "ArmGoal",
    "GoalSpec",
    "EngineConfig",
    "default_config_dict",
    "resolve_config",
    "load_config",
    "dump_config",
]


class ConfigError(ValueError):
    """Invalid, unknown, or inconsistent configuration data."""


class RetargetMode(enum.Enum):
    COARSE_TO_FINE = "coarse_to_fine"
    NATURAL_ONLY = "natural_only"
    RELATIVE = "relative"


_I3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


def default_config_dict() -> dict:
    """The full default configuration tree (deep copy, safe to mutate)."""
    return copy.deepcopy({
        "version": 1,
        "clock": "simulated",
        "retarget_mode": "coarse_to_fine",
        "layout": "situated",
        "workspace": {
            "human_reach": 0.75,
            "human_shoulder_separation": 0.38,
            "robot_reach": 0.855,
            "robot_base_separation": 0.50,
        },
        "rig": {
            "arm_base": {
                "left": {"rotation": _I3, "translation": [0.0, 0.0, 0.0]},
                "right": {"rotation": _I3, "translation": [0.0, 0.0, 0.0]},
            },
            "hand_to_gripper": _I3,
            "inplane_rate": 1.0,
            "pitch_rate": 1.0,
            "recovery_rate": 1.5707963267948966,
            "recovery_threshold": 0.02,
            "deadzone": 0.08,
            "rest_position": [0.4, 0.0, 0.0],
            "stale_after": 0.25,
        },
        "perception": {
            "neck_to_head": [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]],
            "arm_to_neck_offset": {"left": [0.0, 0.19, -0.25],
                                   "right": [0.0, -0.19, -0.25]},
            "eye_offset": {"left": [0.0315, 0.0, 0.0],
                           "right": [-0.0315, 0.0, 0.0]},
            "camera_to_virtual": [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
            "eye_focal": 1.0,
            "wrist_focal": 0.6,
            "panel_offset": None,
            "panel_scale": 0.35,
            "behind_eps": 1e-4,
            "static_anchors": None,
        },
        "tracking": {"v_max": 1.0, "omega_max": 3.141592653589793, "inner_rate": 500},
        "rates": {"tick": 60, "pose_input": 60, "controller_input": 50,
                  "command": 60, "anchor": 30, "scene": 15},
        "listen": {"pose_host": "127.0.0.1", "pose_port": 9871,
                   "controller_host": "127.0.0.1", "controller_port": 9872,
                   "bridge_host": "127.0.0.1", "bridge_port": 9873},
        "goal": None,
    })


def _merge(base: dict, override: dict, path: str) -> dict:
    """Deep-merge override into base, rejecting keys base does not know."""
    out = dict(base)
    for key, value in override.items():
        here = f"{path}.{key}" if path else str(key)
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        if isinstance(base[key], dict) and base[key]:
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigError(f"{here} must be a mapping")
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class Rates:
    tick_hz: int = 60
    pose_input_hz: int = 60
    controller_input_hz: int = 50
    command_hz: int = 60
    anchor_hz: int = 30
    scene_hz: int = 15

    def __post_init__(self):
        for name in ("tick_hz", "pose_input_hz", "controller_input_hz",
                     "command_hz", "anchor_hz", "scene_hz"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v > 0):
                raise ConfigError(f"rates.{name} must be a positive integer")

    @property
    def tick_dt(self) -> Fraction:
        return Fraction(1, self.tick_hz)


@dataclass(frozen=True)
class ListenConfig:
    pose_host: str = "127.0.0.1"
    pose_port: int = 9871
    controller_host: str = "127.0.0.1"
    controller_port: int = 9872
    bridge_host: str = "127.0.0.1"
    bridge_port: int = 9873

    def __post_init__(self):
        for name in ("pose_port", "controller_port", "bridge_port"):
            v = getattr(self, name)
            if not (isinstance(v, int) and 0 <= v <= 65535):
                raise ConfigError(f"listen.{name} must be a port number")


@dataclass(frozen=True, eq=False)
class ArmGoal:
    position: np.ndarray
    tolerance: float


@dataclass(frozen=True, eq=False)
class GoalSpec:
    """Scripted end condition: each configured arm near its goal position."""

    arms: dict  # ArmSide -> ArmGoal

    def satisfied(self, scene_arms: dict) -> bool:
        for side, goal in self.arms.items():
            actual = np.asarray(scene_arms[side]["position"], dtype=float)
            if float(np.linalg.norm(actual - goal.position)) > goal.tolerance:
                return False
        return True


@dataclass(frozen=True, eq=False)
class EngineConfig:
    """Fully validated engine configuration plus its resolved source tree."""

    workspace: WorkspaceModel
    rig: RigConfig
    perception: PerceptionConfig
    tracking: TrackingParams
    retarget_mode: RetargetMode
    rates: Rates
    listen: ListenConfig
    clock_mode: str
    goal: GoalSpec | None
    resolved: dict

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.resolved, sort_keys=True,
                               separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _matrix(value, path: str) -> np.ndarray:
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path} must be a 3x3 matrix") from exc
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ConfigError(f"{path} must be a finite 3x3 matrix")
    return m


def _vector(value, path: str, length: int = 3) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path} must be a {length}-vector") from exc
    if v.shape != (length,) or not np.all(np.isfinite(v)):
        raise ConfigError(f"{path} must be a finite {length}-vector")
    return v


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number")
    return float(value)


_SIDE_KEYS = {"left": ArmSide.LEFT, "right": ArmSide.RIGHT}
_EYE_KEYS = {"left": EyeSide.LEFT, "right": EyeSide.RIGHT}


def _build_workspace(d: dict) -> WorkspaceModel:
    try:
        return WorkspaceModel(
            human_reach=_number(d["human_reach"], "workspace.human_reach"),
            human_shoulder_separation=_number(
                d["human_shoulder_separation"], "workspace.human_shoulder_separation"),
            robot_reach=_number(d["robot_reach"], "workspace.robot_reach"),
            robot_base_separation=_number(
                d["robot_base_separation"], "workspace.robot_base_separation"),
        )
    except ValueError as exc:
        raise ConfigError(f"workspace: {exc}") from exc


def _build_rig(d: dict) -> RigConfig:
    bases = {}
    for key, side in _SIDE_KEYS.items():
        entry = d["arm_base"][key]
        bases[side] = ArmTransform(
            rotation=_matrix(entry["rotation"], f"rig.arm_base.{key}.rotation"),
            translation=_vector(entry["translation"],
                                f"rig.arm_base.{key}.translation"))
    stale_s = _number(d["stale_after"], "rig.stale_after")
    if stale_s <= 0:
        raise ConfigError("rig.stale_after must be > 0")
    try:
        return RigConfig(
            arm_base=bases,
            hand_to_gripper=_matrix(d["hand_to_gripper"], "rig.hand_to_gripper"),
            inplane_rate=_number(d["inplane_rate"], "rig.inplane_rate"),
            pitch_rate=_number(d["pitch_rate"], "rig.pitch_rate"),
            recovery_rate=_number(d["recovery_rate"], "rig.recovery_rate"),
            recovery_threshold=_number(d["recovery_threshold"],
                                       "rig.recovery_threshold"),
            deadzone=_number(d["deadzone"], "rig.deadzone"),
            rest_position=_vector(d["rest_position"], "rig.rest_position"),
            stale_after_us=int(round(stale_s * 1_000_000)),
        )
    except ValueError as exc:
        raise ConfigError(f"rig: {exc}") from exc


def _build_perception(d: dict, layout: PanelLayout) -> PerceptionConfig:
    panel_offset = d["panel_offset"]
    if panel_offset is not None:
        panel_offset = _vector(panel_offset, "perception.panel_offset", 2)
    static = d["static_anchors"]
    if static is not None:
        static = {side: _vector(static[key], f"perception.static_anchors.{key}")
                  for key, side in _SIDE_KEYS.items()}
    try:
        return PerceptionConfig(
            neck_to_head=_matrix(d["neck_to_head"], "perception.neck_to_head"),
            arm_to_neck_offset={side: _vector(d["arm_to_neck_offset"][key],
                                              f"perception.arm_to_neck_offset.{key}")
                                for key, side in _SIDE_KEYS.items()},
            eye_offset={eye: _vector(d["eye_offset"][key],
                                     f"perception.eye_offset.{key}")
                        for key, eye in _EYE_KEYS.items()},
            camera_to_virtual=_matrix(d["camera_to_virtual"],
                                      "perception.camera_to_virtual"),
            eye_focal=_number(d["eye_focal"], "perception.eye_focal"),
            wrist_focal=_number(d["wrist_focal"], "perception.wrist_focal"),
            panel_offset=panel_offset,
            panel_scale=_number(d["panel_scale"], "perception.panel_scale"),
            layout=layout,
            behind_eps=_number(d["behind_eps"], "perception.behind_eps"),
            static_anchors=static,
        )
    except ValueError as exc:
        raise ConfigError(f"perception: {exc}") from exc


def _build_goal(d) -> GoalSpec | None:
    if d is None:
        return None
    if not isinstance(d, dict):
        raise ConfigError("goal must be a mapping of arm sides")
    arms = {}
    for key, value in d.items():
        if key not in _SIDE_KEYS:
            raise ConfigError(f"unknown config key: goal.{key}")
        if not isinstance(value, dict) or set(value) != {"position", "tolerance"}:
            raise ConfigError(f"goal.{key} needs exactly position and tolerance")
        tol = _number(value["tolerance"], f"goal.{key}.tolerance")
        if tol <= 0:
            raise ConfigError(f"goal.{key}.tolerance must be > 0")
        arms[_SIDE_KEYS[key]] = ArmGoal(
            position=_vector(value["position"], f"goal.{key}.position"),
            tolerance=tol)
    if not arms:
        return None
    return GoalSpec(arms=arms)


def resolve_config(overrides: dict | None = None) -> EngineConfig:
    """Merge overrides onto the defaults and build the validated config."""
    merged = _merge(default_config_dict(), overrides or {}, "")

    if merged["clock"] not in ("wall", "simulated"):
        raise ConfigError("clock must be 'wall' or 'simulated'")
    try:
        mode = RetargetMode(merged["retarget_mode"])
    except ValueError:
        raise ConfigError(f"unknown retarget_mode: {merged['retarget_mode']!r}") from None
    try:
        layout = PanelLayout(merged["layout"])
    except ValueError:
        raise ConfigError(f"unknown layout: {merged['layout']!r}") from None

    rates_d = merged["rates"]
    rates = Rates(tick_hz=rates_d["tick"], pose_input_hz=rates_d["pose_input"],
                  controller_input_hz=rates_d["controller_input"],
                  command_hz=rates_d["command"], anchor_hz=rates_d["anchor"],
                  scene_hz=rates_d["scene"])
    listen_d = merged["listen"]
    listen = ListenConfig(pose_host=listen_d["pose_host"],
                          pose_port=listen_d["pose_port"],
                          controller_host=listen_d["controller_host"],
                          controller_port=listen_d["controller_port"],
                          bridge_host=listen_d["bridge_host"],
                          bridge_port=listen_d["bridge_port"])
    try:
        tracking = TrackingParams(
            v_max=_number(merged["tracking"]["v_max"], "tracking.v_max"),
            omega_max=_number(merged["tracking"]["omega_max"], "tracking.omega_max"),
            inner_rate=merged["tracking"]["inner_rate"])
    except ValueError as exc:
        raise ConfigError(f"tracking: {exc}") from exc

    return EngineConfig(
        workspace=_build_workspace(merged["workspace"]),
        rig=_build_rig(merged["rig"]),
        perception=_build_perception(merged["perception"], layout),
        tracking=tracking,
        retarget_mode=mode,
        rates=rates,
        listen=listen,
        clock_mode=merged["clock"],
        goal=_build_goal(merged["goal"]),
        resolved=merged,
    )


def load_config(path: str | None = None, overrides: dict | None = None) -> EngineConfig:
    """Load YAML from ``path`` (optional), apply extra overrides on top."""
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping at the top level")
        data = loaded
    merged_overrides = _merge_overrides(data, overrides or {})
    return resolve_config(merged_overrides)


def _merge_overrides(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if (isinstance(value, dict) and isinstance(out.get(key), dict)):
            out[key] = _merge_overrides(out[key], value)
        else:
            out[key] = value
    return out


def dump_config(config: EngineConfig) -> str:
    """The resolved tree as YAML, for --print-config style inspection."""
    return yaml.safe_dump(config.resolved, sort_keys=True)
