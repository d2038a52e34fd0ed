"""The engine loop: inputs in, commands/anchors/scenes out, all rate-gated.

One tick, at the configured tick rate:

1. Drain the input queues.  Controller samples update visibility edges in
   arrival order; the newest sample per side wins for everything else.
2. Run the configured retargeting variant to produce one command per arm.
3. Advance the simulated robot toward the commands.
4. Recompute panel placements.
5. Push command pair, placements, and scene snapshot into their rate gates
   and poll the gates at the current time; emissions fan out to subscribers
   as immutable messages.

Under a simulated clock the loop is fully deterministic: tick k happens at
exactly k ticks of rational time, timestamps are derived from that time, and
gate emissions are pure functions of tick count.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .clock import SimulatedClock, WallClock
from .config import EngineConfig, RetargetMode
from .metrics import MetricsAccumulator, MetricsReport
from .retargeting import (
    RetargetState,
    SIDES,
    natural_tick,
    relative_tick,
    tick as coarse_to_fine_tick,
)
from .simrobot import SimRobotState, initial_state, scene_snapshot, step_exact
from .situating import PlacementMemory, VisibilityState, place_panels, toggle_visibility
from .transport import (
    ControllerFrame,
    InputQueue,
    PoseFrame,
    RateGate,
    command_to_frame,
    controller_frame_to_state,
    pose_frame_to_sample,
)

__all__ = ["Engine", "TickResult"]

_TICK_FN = {
    RetargetMode.COARSE_TO_FINE: coarse_to_fine_tick,
    RetargetMode.NATURAL_ONLY: natural_tick,
    RetargetMode.RELATIVE: relative_tick,
}


@dataclass(frozen=True, eq=False)
class TickResult:
    """Everything one tick produced, including gate emissions (or None)."""

    t: Fraction
    t_us: int
    commands: dict  # ArmSide -> EndEffectorCommand
    command_frames: tuple | None  # emitted this tick, one frame per side
    anchors: list | None  # emitted placements
    scene: object | None  # emitted snapshot


class Engine:
    """Single-writer engine; all mutation happens inside :meth:`tick`."""

    def __init__(self, config: EngineConfig, clock=None):
        self.config = config
        if clock is None:
            clock = (SimulatedClock() if config.clock_mode == "simulated"
                     else WallClock())
        self.clock = clock
        self.retarget_state = RetargetState()
        self.visibility = VisibilityState()
        self.placement_memory = PlacementMemory()
        self.robot: SimRobotState = initial_state(
            config.perception.neck_to_head, config.rig.rest_position)
        self.latest_hand: dict = {s: None for s in SIDES}
        self.latest_ctrl: dict = {s: None for s in SIDES}
        self.pose_queue = InputQueue()
        self.ctrl_queue = InputQueue()
        self.command_gate = RateGate(config.rates.command_hz)
        self.anchor_gate = RateGate(config.rates.anchor_hz)
        self.scene_gate = RateGate(config.rates.scene_hz)
        self.metrics = MetricsAccumulator()
        self.tick_count = 0
        self._tick_fn = _TICK_FN[config.retarget_mode]
        self._command_subscribers: list = []
        self._anchor_subscribers: list = []
        self._scene_subscribers: list = []
        self._input_taps: list = []

    # -- subscriptions -----------------------------------------------------

    def on_commands(self, fn) -> None:
        self._command_subscribers.append(fn)

    def on_anchors(self, fn) -> None:
        self._anchor_subscribers.append(fn)

    def on_scene(self, fn) -> None:
        self._scene_subscribers.append(fn)

    def on_input(self, fn) -> None:
        """Tap every ingested frame (recording); must not block."""
        self._input_taps.append(fn)

    # -- input ingestion ---------------------------------------------------

    def ingest_pose(self, frame: PoseFrame) -> None:
        """Feed one pose frame directly (replay and in-process drivers)."""
        for tap in self._input_taps:
            tap(frame)
        self.pose_queue.put(frame)

    def ingest_controller(self, frame: ControllerFrame) -> None:
        for tap in self._input_taps:
            tap(frame)
        self.ctrl_queue.put(frame)

    def _drain_inputs(self) -> None:
        for frame in self.pose_queue.drain():
            if isinstance(frame, PoseFrame):
                self.latest_hand[frame.side] = pose_frame_to_sample(frame)
        for frame in self.ctrl_queue.drain():
            if not isinstance(frame, ControllerFrame):
                continue
            state = controller_frame_to_state(frame)
            before = self.visibility.visible[state.side]
            self.visibility = toggle_visibility(self.visibility, state)
            if self.visibility.visible[state.side] != before:
                self.metrics.visibility_toggles += 1
            self.latest_ctrl[state.side] = state

    # -- the tick ----------------------------------------------------------

    def tick(self) -> TickResult:
        """Advance simulated time by one tick and run the full pipeline."""
        dt = self.config.rates.tick_dt
        if self.clock.is_simulated:
            self.clock.advance(dt)
        t = self.clock.now()
        t_us = self.clock.now_us()
        self.tick_count += 1

        self._drain_inputs()

        prev_commands = {s: self.retarget_state.arm(s).last_command for s in SIDES}
        commands = self._tick_fn(self.latest_hand, self.latest_ctrl,
                                 self.retarget_state, self.config.workspace,
                                 self.config.rig, float(dt), t_us)
        self.robot = step_exact(self.robot, commands, self.config.tracking,
                                self.config.workspace.robot_sphere, dt)
        placements = place_panels(commands, self.visibility,
                                  self.config.perception, self.config.rig,
                                  self.placement_memory)
        scene = scene_snapshot(self.robot)

        self.metrics.observe_tick(commands, prev_commands,
                                  self.retarget_state, float(dt))

        self.command_gate.push(tuple(command_to_frame(commands[s]) for s in SIDES))
        self.anchor_gate.push(placements)
        self.scene_gate.push(scene)

        emitted_commands = self.command_gate.poll(t)
        emitted_anchors = self.anchor_gate.poll(t)
        emitted_scene = self.scene_gate.poll(t)

        if emitted_commands is not None:
            for fn in self._command_subscribers:
                fn(emitted_commands, t_us)
        if emitted_anchors is not None:
            for fn in self._anchor_subscribers:
                fn(emitted_anchors, t_us)
        if emitted_scene is not None:
            for fn in self._scene_subscribers:
                fn(emitted_scene, t_us)

        return TickResult(t=t, t_us=t_us, commands=commands,
                          command_frames=emitted_commands,
                          anchors=emitted_anchors, scene=emitted_scene)

    def run_ticks(self, n: int) -> list:
        """Run n ticks on the simulated clock, returning every result."""
        return [self.tick() for _ in range(n)]

    def report(self) -> MetricsReport:
        goal_met = None
        if self.config.goal is not None:
            goal_met = self.config.goal.satisfied(scene_snapshot(self.robot).arms)
        return self.metrics.report(float(self.robot.sim_time), goal_met)
