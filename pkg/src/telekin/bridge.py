"""Console bridge: one WebSocket endpoint serving telemetry and inputs.

Sessions speak JSON text messages over a persistent connection to ``/ws``:

* client hello: ``{"type": "hello", "role": "driver" | "observer"}``;
  the reply is a welcome carrying the session role plus the geometry and
  rate constants a renderer needs.  At most one driver exists at a time; a
  second driver hello gets a busy error and the session stays an observer.
* driver inputs: ``pose`` and ``controller`` messages mirroring the binary
  input frames field for field; they are converted and ingested exactly as
  datagrams would be.
* simulated-clock stepping: a driver may send ``{"type": "step",
  "ticks": n}`` to advance the engine deterministically; rejected on a
  wall-clock engine where the loop free-runs.
* telemetry to everyone: ``command``, ``anchors``, and ``scene`` messages,
  emitted at their configured rates; scene messages carry per-arm automaton
  modes and stale flags for the console's badges.

A malformed message yields a session-scoped ``error`` reply and the session
survives.  Any HTTP request to a path other than ``/ws`` is answered from
the static console directory, so a browser can load the operator page from
the same port the socket lives on.
"""
from __future__ import annotations

import json
import queue
import threading
from pathlib import Path

from websockets.datastructures import Headers
from websockets.http11 import Response
from websockets.sync.server import ServerConnection, serve

from .engine import Engine
from .retargeting import ArmSide, SIDES
from .transport import ControllerFrame, PoseFrame, anchor_record

__all__ = ["Bridge", "BridgeError"]

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}

_SIDE_VALUES = {s.value: s for s in SIDES}

_FALLBACK_PAGE = b"""<!doctype html>
<html><head><meta charset="utf-8"><title>operator console</title></head>
<body><p>The operator console bundle is not built. The WebSocket endpoint
is live at <code>/ws</code>.</p></body></html>
"""


class BridgeError(RuntimeError):
    pass


class _Session:
    """Per-connection send queue; slow consumers drop oldest telemetry."""

    def __init__(self, conn: ServerConnection):
        self.conn = conn
        self.queue: queue.Queue = queue.Queue(maxsize=256)
        self.role = "observer"
        self.alive = True

    def offer(self, text: str) -> None:
        try:
            self.queue.put_nowait(text)
        except queue.Full:
            try:
                self.queue.get_nowait()
            except queue.Empty:
                pass
            try:
                self.queue.put_nowait(text)
            except queue.Full:
                pass


class Bridge:
    """Serves engine telemetry and accepts console input on one port.

    ``step_lock`` serializes engine access: in simulated-clock mode session
    threads advance the engine via step messages, and in wall-clock mode the
    external run loop should hold the same lock around each tick.
    """

    def __init__(self, engine: Engine, host: str = "127.0.0.1", port: int = 0,
                 static_dir: str | None = None):
        self.engine = engine
        self._host = host
        self._port = port
        self._static_dir = Path(static_dir) if static_dir else None
        self._sessions: list = []
        self._sessions_lock = threading.Lock()
        self._driver: _Session | None = None
        self._driver_lock = threading.Lock()
        self.step_lock = threading.Lock()
        self._server = None
        self._thread: threading.Thread | None = None
        engine.on_commands(self._publish_commands)
        engine.on_anchors(self._publish_anchors)
        engine.on_scene(self._publish_scene)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "Bridge":
        self._server = serve(self._handle, self._host, self._port,
                             process_request=self._process_request)
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        daemon=True)
        self._thread.start()
        return self

    @property
    def port(self) -> int:
        if self._server is None:
            raise BridgeError("bridge is not started")
        return self._server.socket.getsockname()[1]

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    # -- static files ------------------------------------------------------

    def _process_request(self, conn: ServerConnection, request):
        if request.path == "/ws":
            return None
        path = request.path.split("?", 1)[0]
        if path in ("", "/"):
            path = "/index.html"
        body = None
        ctype = "text/html; charset=utf-8"
        if self._static_dir is not None:
            candidate = (self._static_dir / path.lstrip("/")).resolve()
            try:
                candidate.relative_to(self._static_dir.resolve())
                body = candidate.read_bytes()
                ctype = _CONTENT_TYPES.get(candidate.suffix, "application/octet-stream")
            except (ValueError, OSError):
                body = None
        if body is None:
            if path == "/index.html":
                body = _FALLBACK_PAGE
            else:
                return conn.respond(404, "not found\n")
        headers = Headers([("Content-Type", ctype),
                           ("Content-Length", str(len(body)))])
        return Response(200, "OK", headers, body)

    # -- telemetry fan-out (called from the engine's ticking thread) -------

    def _broadcast(self, payload: dict) -> None:
        text = json.dumps(payload, separators=(",", ":"))
        with self._sessions_lock:
            sessions = list(self._sessions)
        for session in sessions:
            session.offer(text)

    def _publish_commands(self, frames, t_us: int) -> None:
        self._broadcast({
            "type": "command",
            "t_us": t_us,
            "commands": [{
                "side": f.side.value,
                "t_us": f.t_us,
                "position": list(f.position),
                "orientation": list(f.orientation),
                "grip": f.grip,
                "clamped": f.clamped,
            } for f in frames],
        })

    def _publish_anchors(self, placements, t_us: int) -> None:
        self._broadcast({
            "type": "anchors",
            "t_us": t_us,
            "placements": [anchor_record(p) for p in placements],
        })

    def _publish_scene(self, scene, t_us: int) -> None:
        state = self.engine.retarget_state
        self._broadcast({
            "type": "scene",
            "t_us": t_us,
            "scene": scene.to_dict(),
            "modes": {s.value: state.arm(s).mode.value for s in SIDES},
            "stale": {s.value: state.arm(s).stale for s in SIDES},
            "layout": self.engine.config.perception.layout.value,
        })

    # -- session protocol --------------------------------------------------

    def _welcome(self, session: _Session) -> dict:
        cfg = self.engine.config
        pc = cfg.perception
        return {
            "type": "welcome",
            "role": session.role,
            "retarget_mode": cfg.retarget_mode.value,
            "layout": pc.layout.value,
            "wrist_focal": pc.wrist_focal,
            "eye_focal": pc.eye_focal,
            "panel_scale": pc.panel_scale,
            "rates": {
                "tick": cfg.rates.tick_hz,
                "command": cfg.rates.command_hz,
                "anchor": cfg.rates.anchor_hz,
                "scene": cfg.rates.scene_hz,
            },
            "simulated_clock": self.engine.clock.is_simulated,
        }

    def _error(self, code: str, detail: str) -> str:
        return json.dumps({"type": "error", "error": code, "detail": detail},
                          separators=(",", ":"))

    def _handle(self, conn: ServerConnection) -> None:
        session = _Session(conn)
        with self._sessions_lock:
            self._sessions.append(session)
        sender = threading.Thread(target=self._send_loop, args=(session,),
                                  daemon=True)
        sender.start()
        try:
            for raw in conn:
                reply = self._dispatch(session, raw)
                if reply is not None:
                    session.offer(reply)
        finally:
            session.alive = False
            with self._sessions_lock:
                if session in self._sessions:
                    self._sessions.remove(session)
            with self._driver_lock:
                if self._driver is session:
                    self._driver = None
            session.queue.put(None)  # unblock the sender

    def _send_loop(self, session: _Session) -> None:
        while True:
            item = session.queue.get()
            if item is None or not session.alive:
                return
            try:
                session.conn.send(item)
            except Exception:
                session.alive = False
                return

    def _dispatch(self, session: _Session, raw) -> str | None:
        if isinstance(raw, bytes):
            return self._error("malformed", "expected a text message")
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            return self._error("malformed", f"bad JSON: {exc}")
        if not isinstance(msg, dict) or "type" not in msg:
            return self._error("malformed", "message must be an object with a type")
        kind = msg["type"]
        try:
            if kind == "hello":
                return self._on_hello(session, msg)
            if kind == "pose":
                return self._on_pose(session, msg)
            if kind == "controller":
                return self._on_controller(session, msg)
            if kind == "step":
                return self._on_step(session, msg)
        except (KeyError, TypeError, ValueError) as exc:
            return self._error("malformed", f"bad {kind} message: {exc}")
        return self._error("malformed", f"unknown message type {kind!r}")

    def _on_hello(self, session: _Session, msg: dict) -> str:
        role = msg.get("role", "observer")
        if role not in ("driver", "observer"):
            return self._error("malformed", f"unknown role {role!r}")
        if role == "driver":
            with self._driver_lock:
                if self._driver is not None and self._driver is not session:
                    return self._error("busy", "another driver session is active")
                self._driver = session
                session.role = "driver"
        return json.dumps(self._welcome(session), separators=(",", ":"))

    def _require_driver(self, session: _Session) -> str | None:
        if session.role != "driver":
            return self._error("forbidden", "driver role required")
        return None

    def _on_pose(self, session: _Session, msg: dict) -> str | None:
        denied = self._require_driver(session)
        if denied:
            return denied
        side = _SIDE_VALUES[msg["side"]]
        position = tuple(float(v) for v in msg["position"])
        orientation = tuple(float(v) for v in msg["orientation"])
        if len(position) != 3 or len(orientation) != 4:
            raise ValueError("position must be 3 numbers, orientation 4")
        frame = PoseFrame(side, int(msg["t_us"]), position, orientation)
        self.engine.ingest_pose(frame)
        return None

    def _on_controller(self, session: _Session, msg: dict) -> str | None:
        denied = self._require_driver(session)
        if denied:
            return denied
        side = _SIDE_VALUES[msg["side"]]
        frame = ControllerFrame(
            side, int(msg["t_us"]),
            bool(msg.get("mode_hold", False)),
            bool(msg.get("vis_toggle", False)),
            bool(msg.get("grip", False)),
            float(msg.get("u1", 0.0)), float(msg.get("u2", 0.0)))
        self.engine.ingest_controller(frame)
        return None

    def _on_step(self, session: _Session, msg: dict) -> str:
        denied = self._require_driver(session)
        if denied:
            return denied
        if not self.engine.clock.is_simulated:
            return self._error("forbidden",
                               "step is only available on a simulated clock")
        ticks = int(msg.get("ticks", 1))
        if not (1 <= ticks <= 100_000):
            return self._error("malformed", "ticks must be in [1, 100000]")
        with self.step_lock:
            for _ in range(ticks):
                self.engine.tick()
            t_us = self.engine.clock.now_us()
        return json.dumps({"type": "stepped", "ticks": ticks, "t_us": t_us},
                          separators=(",", ":"))
