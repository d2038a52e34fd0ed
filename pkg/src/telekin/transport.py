"""Wire codecs and rate-gated stream plumbing.

Binary input/output frames are fixed-length, little-endian, and magic-tagged
so golden logs are bit-exact across platforms:

* pose input:        ``CFP1`` | side u8 | t u64 µs | position 3×f64 | orientation 4×f64
* controller input:  ``CFC1`` | side u8 | t u64 µs | buttons u8 | u1 f32 | u2 f32
* command output:    ``CFO1`` | side u8 | t u64 µs | position 3×f64 | orientation 4×f64 | grip u8 | clamped u8

Frames carry plain tuples, not arrays, so equality is exact and decoded
frames re-encode to the identical bytes.  Anchor placements travel as
structured text (JSON) with a fixed key order.

Inputs use datagram semantics: lossy, latest-wins, decode errors counted and
dropped.  Each listener thread feeds a bounded ordered queue the engine
drains once per tick.  Output decimation is handled by :class:`RateGate`,
which is exact under a simulated clock.
"""
from __future__ import annotations

import json
import math
import socket
import struct
import threading
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import Pose
from .retargeting import ArmSide, ControllerState, EndEffectorCommand, HandPoseSample
from .situating import AnchorPlacement

__all__ = [
    "POSE_MAGIC",
    "CONTROLLER_MAGIC",
    "COMMAND_MAGIC",
    "POSE_FRAME_LEN",
    "CONTROLLER_FRAME_LEN",
    "COMMAND_FRAME_LEN",
    "ProtocolError",
    "ShortFrameError",
    "BadMagicError",
    "InvalidFrameError",
    "PoseFrame",
    "ControllerFrame",
    "CommandFrame",
    "encode_pose_frame",
    "decode_pose_frame",
    "encode_controller_frame",
    "decode_controller_frame",
    "encode_command_frame",
    "decode_command_frame",
    "decode_any",
    "pose_frame_to_sample",
    "controller_frame_to_state",
    "command_to_frame",
    "frame_to_command",
    "anchor_record",
    "encode_anchor_message",
    "RateGate",
    "InputQueue",
    "UdpListener",
]

POSE_MAGIC = b"CFP1"
CONTROLLER_MAGIC = b"CFC1"
COMMAND_MAGIC = b"CFO1"

_POSE_STRUCT = struct.Struct("<4sBQ3d4d")
_CTRL_STRUCT = struct.Struct("<4sBQB2f")
_CMD_STRUCT = struct.Struct("<4sBQ3d4dBB")

POSE_FRAME_LEN = _POSE_STRUCT.size
CONTROLLER_FRAME_LEN = _CTRL_STRUCT.size
COMMAND_FRAME_LEN = _CMD_STRUCT.size

QUAT_NORM_TOL = 1e-6

_BUTTON_MODE_HOLD = 0x01
_BUTTON_VIS_TOGGLE = 0x02
_BUTTON_GRIP = 0x04
_BUTTON_MASK = 0x07


class ProtocolError(ValueError):
    """Base for every wire decode failure."""


class ShortFrameError(ProtocolError):
    """Frame length does not match the fixed layout."""


class BadMagicError(ProtocolError):
    """Frame does not start with a known magic tag."""


class InvalidFrameError(ProtocolError):
    """Frame is structurally sound but carries invalid field values."""


def _side_byte(side: ArmSide) -> int:
    return 0 if side is ArmSide.LEFT else 1


def _byte_side(b: int) -> ArmSide:
    if b == 0:
        return ArmSide.LEFT
    if b == 1:
        return ArmSide.RIGHT
    raise InvalidFrameError(f"side byte must be 0 or 1, got {b}")


def _check_t_us(t_us: int) -> int:
    t = int(t_us)
    if not (0 <= t < 2 ** 64):
        raise ValueError("timestamp must fit an unsigned 64-bit microsecond count")
    return t


def _check_finite(values, what: str) -> None:
    if not all(math.isfinite(v) for v in values):
        raise InvalidFrameError(f"non-finite {what}")


@dataclass(frozen=True)
class PoseFrame:
    """One tracked-pose datagram; position meters, orientation (w,x,y,z)."""

    side: ArmSide
    t_us: int
    position: tuple
    orientation: tuple


@dataclass(frozen=True)
class ControllerFrame:
    """One controller datagram; deflections are 32-bit on the wire."""

    side: ArmSide
    t_us: int
    mode_hold: bool
    vis_toggle: bool
    grip: bool
    u1: float
    u2: float


@dataclass(frozen=True)
class CommandFrame:
    """One end-effector command as emitted on the output stream."""

    side: ArmSide
    t_us: int
    position: tuple
    orientation: tuple
    grip: bool
    clamped: bool


def encode_pose_frame(frame: PoseFrame) -> bytes:
    _check_finite(frame.position, "position")
    _check_finite(frame.orientation, "orientation")
    return _POSE_STRUCT.pack(POSE_MAGIC, _side_byte(frame.side),
                             _check_t_us(frame.t_us),
                             *frame.position, *frame.orientation)


def decode_pose_frame(buf: bytes) -> PoseFrame:
    _precheck(buf, POSE_MAGIC, POSE_FRAME_LEN)
    _, side_b, t_us, px, py, pz, qw, qx, qy, qz = _POSE_STRUCT.unpack(buf)
    position = (px, py, pz)
    orientation = (qw, qx, qy, qz)
    _check_finite(position, "position")
    _check_finite(orientation, "orientation")
    norm = math.sqrt(sum(v * v for v in orientation))
    if abs(norm - 1.0) > QUAT_NORM_TOL:
        raise InvalidFrameError(f"orientation norm {norm} outside unit tolerance")
    return PoseFrame(_byte_side(side_b), t_us, position, orientation)


def encode_controller_frame(frame: ControllerFrame) -> bytes:
    _check_finite((frame.u1, frame.u2), "deflection")
    buttons = ((_BUTTON_MODE_HOLD if frame.mode_hold else 0)
               | (_BUTTON_VIS_TOGGLE if frame.vis_toggle else 0)
               | (_BUTTON_GRIP if frame.grip else 0))
    return _CTRL_STRUCT.pack(CONTROLLER_MAGIC, _side_byte(frame.side),
                             _check_t_us(frame.t_us), buttons,
                             frame.u1, frame.u2)


def decode_controller_frame(buf: bytes) -> ControllerFrame:
    _precheck(buf, CONTROLLER_MAGIC, CONTROLLER_FRAME_LEN)
    _, side_b, t_us, buttons, u1, u2 = _CTRL_STRUCT.unpack(buf)
    if buttons & ~_BUTTON_MASK:
        raise InvalidFrameError(f"unknown button bits 0x{buttons:02x}")
    _check_finite((u1, u2), "deflection")
    u1 = min(1.0, max(-1.0, u1))
    u2 = min(1.0, max(-1.0, u2))
    return ControllerFrame(_byte_side(side_b), t_us,
                           bool(buttons & _BUTTON_MODE_HOLD),
                           bool(buttons & _BUTTON_VIS_TOGGLE),
                           bool(buttons & _BUTTON_GRIP), u1, u2)


def encode_command_frame(frame: CommandFrame) -> bytes:
    _check_finite(frame.position, "position")
    _check_finite(frame.orientation, "orientation")
    return _CMD_STRUCT.pack(COMMAND_MAGIC, _side_byte(frame.side),
                            _check_t_us(frame.t_us),
                            *frame.position, *frame.orientation,
                            1 if frame.grip else 0, 1 if frame.clamped else 0)


def decode_command_frame(buf: bytes) -> CommandFrame:
    _precheck(buf, COMMAND_MAGIC, COMMAND_FRAME_LEN)
    (_, side_b, t_us, px, py, pz, qw, qx, qy, qz,
     grip, clamped) = _CMD_STRUCT.unpack(buf)
    position = (px, py, pz)
    orientation = (qw, qx, qy, qz)
    _check_finite(position, "position")
    _check_finite(orientation, "orientation")
    if grip not in (0, 1) or clamped not in (0, 1):
        raise InvalidFrameError("grip and clamped bytes must be 0 or 1")
    return CommandFrame(_byte_side(side_b), t_us, position, orientation,
                        bool(grip), bool(clamped))


_DECODERS = {
    POSE_MAGIC: (decode_pose_frame, POSE_FRAME_LEN),
    CONTROLLER_MAGIC: (decode_controller_frame, CONTROLLER_FRAME_LEN),
    COMMAND_MAGIC: (decode_command_frame, COMMAND_FRAME_LEN),
}


def _precheck(buf: bytes, magic: bytes, expected_len: int) -> None:
    if len(buf) < 4:
        raise ShortFrameError(f"frame of {len(buf)} bytes has no room for a magic tag")
    if buf[:4] != magic:
        raise BadMagicError(f"expected magic {magic!r}, got {buf[:4]!r}")
    if len(buf) != expected_len:
        raise ShortFrameError(f"expected {expected_len} bytes, got {len(buf)}")


def decode_any(buf: bytes):
    """Decode any known frame by its magic tag."""
    if len(buf) < 4:
        raise ShortFrameError(f"frame of {len(buf)} bytes has no room for a magic tag")
    entry = _DECODERS.get(bytes(buf[:4]))
    if entry is None:
        raise BadMagicError(f"unknown magic {bytes(buf[:4])!r}")
    return entry[0](buf)


def pose_frame_to_sample(frame: PoseFrame) -> HandPoseSample:
    """Lift a wire pose into the domain (normalizing the orientation)."""
    return HandPoseSample(frame.side,
                          Pose(np.array(frame.position), np.array(frame.orientation)),
                          frame.t_us)


def controller_frame_to_state(frame: ControllerFrame) -> ControllerState:
    return ControllerState(side=frame.side, mode_hold=frame.mode_hold,
                           vis_toggle=frame.vis_toggle, u1=frame.u1, u2=frame.u2,
                           grip_close=frame.grip, t_us=frame.t_us)


def command_to_frame(cmd: EndEffectorCommand) -> CommandFrame:
    return CommandFrame(cmd.side, cmd.t_us,
                        tuple(float(v) for v in cmd.position),
                        tuple(float(v) for v in cmd.orientation),
                        bool(cmd.grip_close), bool(cmd.clamped))


def frame_to_command(frame: CommandFrame) -> EndEffectorCommand:
    return EndEffectorCommand(frame.side, np.array(frame.position),
                              np.array(frame.orientation), frame.grip,
                              frame.clamped, frame.t_us)


def anchor_record(p: AnchorPlacement) -> dict:
    """One placement as a plain, stably ordered record."""
    return {
        "arm": p.arm.value,
        "eye": p.eye.value,
        "anchor": [float(v) for v in p.anchor],
        "panel_center": [float(v) for v in p.panel_center],
        "scale": float(p.panel_scale),
        "visible": bool(p.visible),
    }


def encode_anchor_message(placements, t_us: int) -> bytes:
    """All four placements of one emission as a single JSON line."""
    body = {"type": "anchors", "t_us": int(t_us),
            "placements": [anchor_record(p) for p in placements]}
    return (json.dumps(body, separators=(",", ":")) + "\n").encode("ascii")


class RateGate:
    """Sample-and-hold decimator against a monotone clock.

    ``push`` stores the newest item; ``poll(t)`` emits it exactly once per
    rate slot, where slot n covers [n/rate, (n+1)/rate).  The slot containing
    t = 0 never emits (nothing can predate the run), so over k input ticks at
    the same rate exactly k emissions occur, and a gate at half the tick rate
    emits every second tick.  Missed slots are not back-filled; after a dry
    spell the next poll with data emits immediately and the cadence resumes.
    """

    def __init__(self, rate_hz: int):
        if rate_hz <= 0:
            raise ValueError("rate must be > 0")
        self.rate_hz = int(rate_hz)
        self._latest = None
        self._armed = False
        self._last_slot = 0
        self.emitted = 0

    def push(self, item) -> None:
        self._latest = item
        self._armed = True

    def poll(self, t: Fraction):
        """Item to emit at simulated time ``t``, or None."""
        slot = int(Fraction(t) * self.rate_hz)  # floor for t >= 0
        if slot > self._last_slot and self._armed:
            self._last_slot = slot
            self.emitted += 1
            return self._latest
        return None


class InputQueue:
    """Thread-safe bounded FIFO; overflow drops the oldest item."""

    def __init__(self, maxlen: int = 256):
        self._items = deque(maxlen=maxlen)
        self._lock = threading.Lock()
        self.dropped = 0

    def put(self, item) -> None:
        with self._lock:
            if len(self._items) == self._items.maxlen:
                self.dropped += 1
            self._items.append(item)

    def drain(self) -> list:
        with self._lock:
            items = list(self._items)
            self._items.clear()
        return items


class UdpListener:
    """Datagram listener thread decoding frames into an :class:`InputQueue`.

    Undecodable datagrams are counted and dropped, matching lossy input
    semantics; they never stop the listener.
    """

    def __init__(self, host: str, port: int, queue: InputQueue,
                 decoder=decode_any):
        self._queue = queue
        self._decoder = decoder
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self._sock.settimeout(0.1)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self.decode_errors = 0

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def start(self) -> "UdpListener":
        self._thread.start()
        return self

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                buf, _ = self._sock.recvfrom(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                self._queue.put(self._decoder(buf))
            except ProtocolError:
                self.decode_errors += 1

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=2.0)
        self._sock.close()
