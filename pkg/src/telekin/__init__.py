"""telekin: a desk-scale bimanual teleoperation engine.

Human wrist poses and controller signals stream in over simple binary
datagrams; a deterministic tick loop retargets them into rate-limited
end-effector commands for a simulated two-arm robot, places wrist-camera
view panels anchored at each gripper's projection in the operator's view,
and fans everything out to a browser console over a WebSocket bridge.

The retargeting automaton supports a coarse-to-fine workflow (continuous
natural mapping, thumbstick-refined orientation holds, constant-rate
recovery) alongside two baseline mappings selected purely by configuration.
"""
from .clock import SimulatedClock, WallClock
from .config import (
    ConfigError,
    EngineConfig,
    RetargetMode,
    default_config_dict,
    dump_config,
    load_config,
    resolve_config,
)
from .engine import Engine, TickResult
from .geometry import (
    InvalidRotationError,
    Pose,
    geodesic_distance,
    slerp_step,
)
from .metrics import MetricsReport
from .retargeting import (
    ArmSide,
    ControllerState,
    EndEffectorCommand,
    HandPoseSample,
    Mode,
    RigConfig,
)
from .situating import AnchorPlacement, EyeSide, PanelLayout, PerceptionConfig
from .trace import Trace, TraceError, read_trace, replay, write_trace
from .transport import (
    CommandFrame,
    ControllerFrame,
    PoseFrame,
    ProtocolError,
    decode_any,
)
from .workspace import WorkspaceModel, compute_scaling

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SimulatedClock",
    "WallClock",
    "ConfigError",
    "EngineConfig",
    "RetargetMode",
    "default_config_dict",
    "dump_config",
    "load_config",
    "resolve_config",
    "Engine",
    "TickResult",
    "InvalidRotationError",
    "Pose",
    "geodesic_distance",
    "slerp_step",
    "MetricsReport",
    "ArmSide",
    "ControllerState",
    "EndEffectorCommand",
    "HandPoseSample",
    "Mode",
    "RigConfig",
    "AnchorPlacement",
    "EyeSide",
    "PanelLayout",
    "PerceptionConfig",
    "Trace",
    "TraceError",
    "read_trace",
    "replay",
    "write_trace",
    "CommandFrame",
    "ControllerFrame",
    "PoseFrame",
    "ProtocolError",
    "decode_any",
    "WorkspaceModel",
    "compute_scaling",
]
