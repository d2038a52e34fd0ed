"""Command-line entry points.

Subcommands:

* ``run``     live engine: UDP input listeners, console bridge, tick loop.
* ``record``  capture an input trace (live UDP capture, or the built-in
              scripted episode with ``--synthetic``).
* ``replay``  deterministic replay of a trace under a config; writes the
              command log, anchor log, and metrics.
* ``compare`` replay one trace under several configurations side by side.

Exit codes: 0 success, 2 configuration problems, 3 protocol/trace problems,
4 runtime failures.
"""
from __future__ import annotations

import argparse
import json
import signal
import sys
import time
from pathlib import Path

from .bridge import Bridge
from .config import ConfigError, EngineConfig, dump_config, load_config
from .engine import Engine
from .trace import TraceError, read_trace, replay as replay_trace, write_trace
from .transport import ProtocolError, UdpListener
from .synthetic import scripted_frames

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROTOCOL = 3
EXIT_RUNTIME = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="YAML configuration file")
    p.add_argument("--mode", choices=["coarse_to_fine", "natural_only", "relative"],
                   help="override retarget_mode")
    p.add_argument("--layout", choices=["situated", "static", "none"],
                   help="override panel layout")
    p.add_argument("--sim-clock", action="store_true",
                   help="force the simulated clock")
    p.add_argument("--print-config", action="store_true",
                   help="print the fully resolved configuration and exit")


def _build_config(args) -> EngineConfig:
    overrides: dict = {}
    if args.mode:
        overrides["retarget_mode"] = args.mode
    if args.layout:
        overrides["layout"] = args.layout
    if args.sim_clock:
        overrides["clock"] = "simulated"
    return load_config(args.config, overrides)


def _maybe_print_config(args, config: EngineConfig) -> bool:
    if args.print_config:
        sys.stdout.write(dump_config(config))
        return True
    return False


def _cmd_run(args) -> int:
    config = _build_config(args)
    if _maybe_print_config(args, config):
        return EXIT_OK
    engine = Engine(config)
    listen = config.listen
    pose_listener = UdpListener(listen.pose_host, listen.pose_port,
                                engine.pose_queue).start()
    ctrl_listener = UdpListener(listen.controller_host, listen.controller_port,
                                engine.ctrl_queue).start()
    bridge = Bridge(engine, listen.bridge_host, listen.bridge_port,
                    static_dir=args.console_dir).start()
    print(f"pose input     udp://{listen.pose_host}:{pose_listener.port}")
    print(f"controller in  udp://{listen.controller_host}:{ctrl_listener.port}")
    print(f"console        http://{listen.bridge_host}:{bridge.port}/")

    stop = {"flag": False}

    def _sigint(signum, frame):
        stop["flag"] = True

    signal.signal(signal.SIGINT, _sigint)
    deadline = None if args.duration is None else time.monotonic() + args.duration
    try:
        if engine.clock.is_simulated:
            # Bridge driver steps the engine; just keep the process alive.
            print("simulated clock: engine advances on driver step messages")
            while not stop["flag"]:
                if deadline is not None and time.monotonic() >= deadline:
                    break
                time.sleep(0.05)
        else:
            dt = config.rates.tick_dt
            next_t = engine.clock.now() + dt
            while not stop["flag"]:
                if deadline is not None and time.monotonic() >= deadline:
                    break
                engine.clock.sleep_until(next_t)
                with bridge.step_lock:
                    engine.tick()
                next_t += dt
    finally:
        bridge.stop()
        pose_listener.stop()
        ctrl_listener.stop()
    print(json.dumps(engine.report().to_dict(), sort_keys=True))
    return EXIT_OK


def _cmd_record(args) -> int:
    config = _build_config(args)
    if _maybe_print_config(args, config):
        return EXIT_OK
    out = Path(args.out)
    if args.synthetic:
        frames = scripted_frames(duration_s=args.duration or 60.0)
        count = write_trace(str(out), frames, config_hash=config.config_hash,
                            description="scripted synthetic episode")
        print(f"wrote {count} frames to {out}")
        return EXIT_OK

    engine = Engine(config)
    captured: list = []
    listen = config.listen
    pose_listener = UdpListener(listen.pose_host, listen.pose_port,
                                engine.pose_queue).start()
    ctrl_listener = UdpListener(listen.controller_host, listen.controller_port,
                                engine.ctrl_queue).start()
    duration = args.duration or 10.0
    print(f"recording from udp ports {pose_listener.port}/{ctrl_listener.port} "
          f"for {duration} s")
    try:
        end = time.monotonic() + duration
        while time.monotonic() < end:
            for frame in engine.pose_queue.drain():
                captured.append(frame)
            for frame in engine.ctrl_queue.drain():
                captured.append(frame)
            time.sleep(0.005)
    finally:
        pose_listener.stop()
        ctrl_listener.stop()
    captured.sort(key=lambda f: f.t_us)
    count = write_trace(str(out), captured, config_hash=config.config_hash,
                        description="live capture")
    print(f"wrote {count} frames to {out}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    config = _build_config(args)
    if _maybe_print_config(args, config):
        return EXIT_OK
    trace = read_trace(args.trace)
    result = replay_trace(trace, config, extra_ticks=args.extra_ticks)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "commands.bin").write_bytes(result.command_log)
        (out / "anchors.jsonl").write_bytes(result.anchor_log)
        (out / "metrics.json").write_text(result.report.to_json() + "\n",
                                          encoding="utf-8")
        print(f"wrote {out}/commands.bin ({len(result.command_log)} bytes), "
              f"anchors.jsonl, metrics.json")
    print(json.dumps({
        "ticks": result.ticks,
        "command_emissions": result.command_emissions,
        "anchor_emissions": result.anchor_emissions,
        "scene_emissions": result.scene_emissions,
        "config_hash": result.config_hash,
        "hash_mismatch": result.hash_mismatch,
        "metrics": result.report.to_dict(),
    }, sort_keys=True))
    return EXIT_OK


def _cmd_compare(args) -> int:
    base_cfg = _build_config(args)
    if _maybe_print_config(args, base_cfg):
        return EXIT_OK
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    if len(modes) < 2:
        raise ConfigError("compare needs at least two modes")
    trace = read_trace(args.trace)
    rows = []
    for mode in modes:
        overrides = {"retarget_mode": mode}
        if args.layout:
            overrides["layout"] = args.layout
        if args.sim_clock:
            overrides["clock"] = "simulated"
        cfg = load_config(args.config, overrides)
        result = replay_trace(trace, cfg, extra_ticks=args.extra_ticks)
        rows.append({"mode": mode, "config_hash": result.config_hash,
                     "metrics": result.report.to_dict()})
    report = {"trace": args.trace, "rows": rows}
    text = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="telekin",
        description="desk-scale bimanual teleoperation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the live engine and console bridge")
    _add_common(p_run)
    p_run.add_argument("--duration", type=float, default=None,
                       help="stop after this many wall seconds")
    p_run.add_argument("--console-dir", default=None,
                       help="directory with the built operator console")
    p_run.set_defaults(fn=_cmd_run)

    p_rec = sub.add_parser("record", help="record an input trace")
    _add_common(p_rec)
    p_rec.add_argument("--out", required=True, help="trace file to write")
    p_rec.add_argument("--duration", type=float, default=None,
                       help="capture length in seconds")
    p_rec.add_argument("--synthetic", action="store_true",
                       help="write the built-in scripted episode instead of capturing")
    p_rec.set_defaults(fn=_cmd_record)

    p_rep = sub.add_parser("replay", help="replay a trace deterministically")
    _add_common(p_rep)
    p_rep.add_argument("--trace", required=True, help="trace file to replay")
    p_rep.add_argument("--out", default=None,
                       help="directory for command/anchor logs and metrics")
    p_rep.add_argument("--extra-ticks", type=int, default=0,
                       help="extra ticks after the last frame")
    p_rep.set_defaults(fn=_cmd_replay)

    p_cmp = sub.add_parser("compare", help="replay one trace under several modes")
    _add_common(p_cmp)
    p_cmp.add_argument("--trace", required=True, help="trace file to replay")
    p_cmp.add_argument("--modes", required=True,
                       help="comma-separated retarget modes (at least two)")
    p_cmp.add_argument("--out", default=None, help="write the JSON report here")
    p_cmp.add_argument("--extra-ticks", type=int, default=0)
    p_cmp.set_defaults(fn=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TraceError, ProtocolError) as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 - last-resort runtime mapping
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
