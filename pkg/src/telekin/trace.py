"""Input traces: versioned recordings of decoded input frames, and replay.

File layout, all little-endian:

* magic ``CFT1``, u32 format version
* u32 header length, then that many bytes of JSON header
  (config hash, creation time, free-form description)
* records until EOF: u16 frame length + the frame's own wire bytes

Frames keep their native encodings, so a trace is a faithful byte log of
what the engine decoded.  Replay drives a fresh engine on a simulated
clock, delivering each frame just before the first tick whose time is at or
past the frame's timestamp; the resulting command log is a deterministic
function of (trace bytes, config).
"""
from __future__ import annotations

import io
import json
import struct
import warnings
from dataclasses import dataclass

from .config import EngineConfig
from .engine import Engine
from .metrics import MetricsReport
from .simrobot import SCENE_RATE_HZ
from .transport import (
    ControllerFrame,
    PoseFrame,
    ProtocolError,
    decode_any,
    encode_anchor_message,
    encode_command_frame,
    encode_controller_frame,
    encode_pose_frame,
)

__all__ = [
    "TRACE_MAGIC",
    "TRACE_VERSION",
    "TraceError",
    "Trace",
    "TraceWriter",
    "write_trace",
    "read_trace",
    "replay",
    "ReplayResult",
]

TRACE_MAGIC = b"CFT1"
TRACE_VERSION = 1

_HEAD = struct.Struct("<4sI")
_HLEN = struct.Struct("<I")
_RLEN = struct.Struct("<H")


class TraceError(ValueError):
    """Malformed trace file or incompatible version."""


@dataclass(frozen=True)
class Trace:
    """A fully loaded trace: header dict plus decoded frames in file order."""

    header: dict
    frames: tuple

    @property
    def config_hash(self) -> str | None:
        return self.header.get("config_hash")


class TraceWriter:
    """Streams frames into a trace file (or any binary file object)."""

    def __init__(self, fh, config_hash: str | None = None,
                 description: str = "", created_us: int = 0):
        self._fh = fh
        header = {"version": TRACE_VERSION, "config_hash": config_hash,
                  "created_us": int(created_us), "description": description}
        blob = json.dumps(header, sort_keys=True,
                          separators=(",", ":")).encode("utf-8")
        fh.write(_HEAD.pack(TRACE_MAGIC, TRACE_VERSION))
        fh.write(_HLEN.pack(len(blob)))
        fh.write(blob)
        self._last_t_us = -1
        self.frame_count = 0

    def append(self, frame) -> None:
        if isinstance(frame, PoseFrame):
            blob = encode_pose_frame(frame)
        elif isinstance(frame, ControllerFrame):
            blob = encode_controller_frame(frame)
        else:
            raise TypeError(f"cannot record frame of type {type(frame).__name__}")
        if frame.t_us < self._last_t_us:
            raise TraceError("trace timestamps must be monotone")
        self._last_t_us = frame.t_us
        self._fh.write(_RLEN.pack(len(blob)))
        self._fh.write(blob)
        self.frame_count += 1


def write_trace(path: str, frames, config_hash: str | None = None,
                description: str = "", created_us: int = 0) -> int:
    with open(path, "wb") as fh:
        w = TraceWriter(fh, config_hash=config_hash, description=description,
                        created_us=created_us)
        for frame in frames:
            w.append(frame)
        return w.frame_count


def read_trace(source) -> Trace:
    """Load a trace from a path, raw bytes, or a binary file object."""
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return read_trace(fh)
    if isinstance(source, bytes):
        return read_trace(io.BytesIO(source))
    fh = source
    head = fh.read(_HEAD.size)
    if len(head) < _HEAD.size:
        raise TraceError("trace too short for its header")
    magic, version = _HEAD.unpack(head)
    if magic != TRACE_MAGIC:
        raise TraceError(f"not a trace file (magic {magic!r})")
    if version != TRACE_VERSION:
        raise TraceError(f"unsupported trace version {version}")
    hlen_b = fh.read(_HLEN.size)
    if len(hlen_b) < _HLEN.size:
        raise TraceError("trace truncated in header length")
    (hlen,) = _HLEN.unpack(hlen_b)
    blob = fh.read(hlen)
    if len(blob) < hlen:
        raise TraceError("trace truncated in header")
    try:
        header = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TraceError(f"bad trace header: {exc}") from exc

    frames = []
    last_t = -1
    while True:
        rlen_b = fh.read(_RLEN.size)
        if not rlen_b:
            break
        if len(rlen_b) < _RLEN.size:
            raise TraceError("trace truncated in record length")
        (rlen,) = _RLEN.unpack(rlen_b)
        payload = fh.read(rlen)
        if len(payload) < rlen:
            raise TraceError("trace truncated in record payload")
        try:
            frame = decode_any(payload)
        except ProtocolError as exc:
            raise TraceError(f"bad record at frame {len(frames)}: {exc}") from exc
        if frame.t_us < last_t:
            raise TraceError("trace timestamps must be monotone")
        last_t = frame.t_us
        frames.append(frame)
    return Trace(header=header, frames=tuple(frames))


@dataclass(frozen=True, eq=False)
class ReplayResult:
    """Output of one deterministic replay."""

    command_log: bytes  # raw concatenated command frames, emission order
    anchor_log: bytes  # one JSON line per anchor emission
    report: MetricsReport
    ticks: int
    command_emissions: int
    anchor_emissions: int
    scene_emissions: int
    final_scene_frame: int
    config_hash: str
    hash_mismatch: bool


def replay(trace: Trace, config: EngineConfig,
           extra_ticks: int = 0) -> ReplayResult:
    """Drive a fresh engine through the trace on a simulated clock.

    The run covers every tick up to the last frame's timestamp, plus
    ``extra_ticks`` more so recoveries or releases can settle.
    """
    if config.clock_mode != "simulated":
        raise TraceError("replay requires a simulated-clock configuration")
    mismatch = False
    if trace.config_hash is not None and trace.config_hash != config.config_hash:
        mismatch = True
        warnings.warn("trace was recorded under a different config; "
                      "replaying anyway", RuntimeWarning, stacklevel=2)

    engine = Engine(config)
    command_chunks: list = []
    anchor_chunks: list = []
    counts = {"commands": 0, "anchors": 0}

    def on_commands(frames, t_us):
        counts["commands"] += 1
        for frame in frames:
            command_chunks.append(encode_command_frame(frame))

    def on_anchors(placements, t_us):
        counts["anchors"] += 1
        anchor_chunks.append(encode_anchor_message(placements, t_us))

    engine.on_commands(on_commands)
    engine.on_anchors(on_anchors)

    frames = list(trace.frames)
    idx = 0
    last_t_us = frames[-1].t_us if frames else 0
    rates = config.rates
    total_ticks = 0
    if frames:
        # Tick k runs at k/tick_hz seconds; cover the last frame's timestamp.
        total_ticks = -((-last_t_us * rates.tick_hz) // 1_000_000)
    total_ticks += extra_ticks

    for k in range(1, total_ticks + 1):
        next_t_us = (k * 1_000_000) // rates.tick_hz
        while idx < len(frames) and frames[idx].t_us <= next_t_us:
            frame = frames[idx]
            if isinstance(frame, PoseFrame):
                engine.ingest_pose(frame)
            else:
                engine.ingest_controller(frame)
            idx += 1
        engine.tick()

    report = engine.report()
    return ReplayResult(
        command_log=b"".join(command_chunks),
        anchor_log=b"".join(anchor_chunks),
        report=report,
        ticks=total_ticks,
        command_emissions=counts["commands"],
        anchor_emissions=counts["anchors"],
        scene_emissions=engine.scene_gate.emitted,
        final_scene_frame=int(engine.robot.sim_time * SCENE_RATE_HZ),
        config_hash=config.config_hash,
        hash_mismatch=mismatch,
    )
