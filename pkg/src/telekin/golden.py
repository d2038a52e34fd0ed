"""Shipped golden artifacts: the reference episode and its command logs.

The package carries a 60-second scripted input trace plus the command log
it produces under each retargeting mode, so any installation can verify
byte-for-byte deterministic replay.  :func:`regenerate` rebuilds everything
from the scripted episode; the test suite only ever replays and compares.
"""
from __future__ import annotations

import hashlib
import io
import json
from importlib import resources
from pathlib import Path

from .config import resolve_config
from .synthetic import scripted_frames
from .trace import TraceWriter, read_trace, replay

__all__ = [
    "GOLDEN_MODES",
    "golden_dir",
    "golden_trace_bytes",
    "golden_command_log",
    "golden_manifest",
    "regenerate",
]

GOLDEN_MODES = ("coarse_to_fine", "natural_only", "relative")

_TRACE_NAME = "episode.trace"
_LOG_TEMPLATE = "commands_{mode}.bin"
_MANIFEST_NAME = "manifest.json"

# Golden runs pin the scripted layout per mode so each baseline variant is
# exercised: full system situated, mapping-only with panels hidden,
# relative deltas situated.
_MODE_LAYOUT = {"coarse_to_fine": "situated",
                "natural_only": "none",
                "relative": "situated"}


def golden_dir():
    return resources.files("telekin").joinpath("data/golden")


def golden_trace_bytes() -> bytes:
    return golden_dir().joinpath(_TRACE_NAME).read_bytes()


def golden_command_log(mode: str) -> bytes:
    if mode not in GOLDEN_MODES:
        raise ValueError(f"unknown golden mode {mode!r}")
    return golden_dir().joinpath(_LOG_TEMPLATE.format(mode=mode)).read_bytes()


def golden_manifest() -> dict:
    return json.loads(golden_dir().joinpath(_MANIFEST_NAME).read_text("utf-8"))


def golden_config(mode: str):
    """The exact configuration a golden log was replayed under."""
    return resolve_config({"retarget_mode": mode,
                           "layout": _MODE_LAYOUT[mode],
                           "clock": "simulated"})


def _sha256(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def regenerate(out_dir: str | Path, duration_s: float = 60.0) -> dict:
    """Rebuild the golden trace and logs into ``out_dir``; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    frames = scripted_frames(duration_s=duration_s)
    buf = io.BytesIO()
    writer = TraceWriter(buf, config_hash=None,
                         description=f"scripted {duration_s:g} s episode")
    for frame in frames:
        writer.append(frame)
    trace_blob = buf.getvalue()
    (out / _TRACE_NAME).write_bytes(trace_blob)

    manifest = {
        "trace": {"file": _TRACE_NAME, "sha256": _sha256(trace_blob),
                  "frames": writer.frame_count,
                  "duration_s": duration_s},
        "logs": {},
    }
    trace = read_trace(trace_blob)
    for mode in GOLDEN_MODES:
        config = golden_config(mode)
        result = replay(trace, config)
        name = _LOG_TEMPLATE.format(mode=mode)
        (out / name).write_bytes(result.command_log)
        manifest["logs"][mode] = {
            "file": name,
            "sha256": _sha256(result.command_log),
            "bytes": len(result.command_log),
            "config_hash": result.config_hash,
            "command_emissions": result.command_emissions,
            "anchor_emissions": result.anchor_emissions,
            "scene_emissions": result.scene_emissions,
        }
    (out / _MANIFEST_NAME).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest
