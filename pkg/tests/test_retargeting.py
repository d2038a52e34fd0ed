"""Retargeting chain: deadzone, natural mapping, joystick refinement, automaton."""
import numpy as np
import pytest

from conftest import random_quat

from telekin.geometry import (
    Pose,
    geodesic_distance,
    identity_quat,
    inplane_rotation,
    matrix_from_quat,
    pitch_rotation,
    quat_from_matrix,
)
from telekin.retargeting import (
    ArmSide,
    ArmTransform,
    ControllerState,
    EndEffectorCommand,
    HandPoseSample,
    Mode,
    RetargetState,
    RigConfig,
    SIDES,
    apply_deadzone,
    joystick_update,
    natural_orientation,
    natural_position,
    natural_tick,
    recovery_step,
    relative_tick,
    tick,
)
from telekin.workspace import WorkspaceModel

TICK_DT = 1.0 / 60.0


def t_of(k: int) -> int:
    return (k * 1_000_000) // 60


def default_ws() -> WorkspaceModel:
    return WorkspaceModel(
        human_reach=0.75,
        human_shoulder_separation=0.38,
        robot_reach=0.855,
        robot_base_separation=0.50,
    )


def mk_hand(side, p, q, t_us):
    return HandPoseSample(side, Pose(np.asarray(p, dtype=float), q), t_us)


def smooth_hand(side, k, rng_seedless_phase=0.0):
    """Deterministic wandering hand pose used by the scenario tests."""
    t = k * TICK_DT
    p = np.array([
        0.30 + 0.05 * np.sin(0.7 * t + rng_seedless_phase),
        0.10 * np.cos(0.5 * t),
        0.05 * np.sin(0.9 * t),
    ])
    angle = 0.4 * np.sin(0.3 * t)
    q = np.array([np.cos(angle / 2), 0.0, 0.0, np.sin(angle / 2)])
    return mk_hand(side, p, q, t_of(k))


class TestDeadzone:
    def test_zero_inside(self):
        assert apply_deadzone(0.05, 0.08) == 0.0
        assert apply_deadzone(-0.08, 0.08) == 0.0
        assert apply_deadzone(0.0, 0.08) == 0.0

    def test_rescaled_outside(self):
        dz = 0.08
        for u in (0.09, 0.5, -0.3, 1.0, -1.0):
            expect = np.sign(u) * (abs(u) - dz) / (1.0 - dz)
            assert apply_deadzone(u, dz) == pytest.approx(expect, abs=1e-15)

    def test_full_deflection_maps_to_one(self):
        assert apply_deadzone(1.0, 0.08) == pytest.approx(1.0, abs=1e-15)
        assert apply_deadzone(-1.0, 0.08) == pytest.approx(-1.0, abs=1e-15)

    def test_continuous_at_boundary(self):
        dz = 0.08
        assert apply_deadzone(dz + 1e-12, dz) == pytest.approx(0.0, abs=1e-10)

    def test_zero_deadzone_is_identity(self):
        for u in (-1.0, -0.3, 0.0, 0.7):
            assert apply_deadzone(u, 0.0) == u


class TestNaturalMapping:
    def test_position_oracle_random(self, rng):
        ws = default_ws()
        for _ in range(500):
            rot = matrix_from_quat(random_quat(rng))
            trans = rng.normal(size=3)
            rig = RigConfig(
                arm_base={s: ArmTransform(rot, trans) for s in SIDES},
                hand_to_gripper=np.eye(3),
            )
            p = rng.normal(size=3) * 0.3
            hand = mk_hand(ArmSide.LEFT, p, random_quat(rng), 0)
            got = natural_position(hand, ws, rig)
            want = rot @ (ws.scaling * p) + trans
            np.testing.assert_allclose(got, want, atol=1e-12, rtol=0)

    def test_orientation_oracle_random(self, rng):
        from conftest import random_rotation
        for _ in range(500):
            base = random_rotation(rng)
            grip = random_rotation(rng)
            rig = RigConfig(
                arm_base={s: ArmTransform(base, np.zeros(3)) for s in SIDES},
                hand_to_gripper=grip,
            )
            q_hand = random_quat(rng)
            hand = mk_hand(ArmSide.RIGHT, [0.3, 0, 0], q_hand, 0)
            got = matrix_from_quat(natural_orientation(hand, rig))
            want = base @ matrix_from_quat(q_hand) @ grip
            np.testing.assert_allclose(got, want, atol=1e-12, rtol=0)

    def test_identity_rig_passes_hand_through(self, rng):
        rig = RigConfig.default()
        q = random_quat(rng)
        hand = mk_hand(ArmSide.LEFT, [0.2, 0.1, 0.0], q, 0)
        np.testing.assert_allclose(natural_orientation(hand, rig), q, atol=1e-12)


class TestJoystickUpdate:
    def test_matrix_order_oracle(self, rng):
        rig = RigConfig.default()
        for _ in range(200):
            held = random_quat(rng)
            u1 = float(rng.uniform(-1, 1))
            u2 = float(rng.uniform(-1, 1))
            from telekin.retargeting import ArmRetargetState
            arm = ArmRetargetState(held_orientation=held.copy())
            ctrl = ControllerState(ArmSide.LEFT, u1=u1, u2=u2)
            q = joystick_update(arm, ctrl, rig, TICK_DT)
            th1 = rig.inplane_rate * apply_deadzone(u1, rig.deadzone) * TICK_DT
            th2 = rig.pitch_rate * apply_deadzone(u2, rig.deadzone) * TICK_DT
            want = matrix_from_quat(held) @ pitch_rotation(th2) @ inplane_rotation(th1)
            np.testing.assert_allclose(matrix_from_quat(q), want, atol=1e-12, rtol=0)

    def test_approach_axis_preserved_without_pitch(self, rng):
        # Horizontal deflection alone spins about the gripper's own approach
        # axis, so that axis must stay put in the world frame.
        rig = RigConfig.default()
        from telekin.retargeting import ArmRetargetState
        for _ in range(100):
            held = random_quat(rng)
            arm = ArmRetargetState(held_orientation=held.copy())
            ctrl = ControllerState(ArmSide.LEFT, u1=float(rng.uniform(-1, 1)), u2=0.0)
            q = joystick_update(arm, ctrl, rig, TICK_DT)
            before = matrix_from_quat(held)[:, 2]
            after = matrix_from_quat(q)[:, 2]
            np.testing.assert_allclose(after, before, atol=1e-12, rtol=0)

    def test_deflection_inside_deadzone_is_inert(self, rng):
        rig = RigConfig.default()
        from telekin.retargeting import ArmRetargetState
        held = random_quat(rng)
        arm = ArmRetargetState(held_orientation=held.copy())
        ctrl = ControllerState(ArmSide.LEFT, u1=0.05, u2=-0.07)
        q = joystick_update(arm, ctrl, rig, TICK_DT)
        np.testing.assert_allclose(q, held, atol=1e-12, rtol=0)

    def test_state_mutated_in_place(self, rng):
        rig = RigConfig.default()
        from telekin.retargeting import ArmRetargetState
        arm = ArmRetargetState(held_orientation=identity_quat())
        ctrl = ControllerState(ArmSide.LEFT, u1=1.0, u2=0.0)
        q = joystick_update(arm, ctrl, rig, TICK_DT)
        assert arm.held_orientation is q


class TestControllerState:
    def test_deflection_clamped(self):
        c = ControllerState(ArmSide.LEFT, u1=2.5, u2=-3.0)
        assert c.u1 == 1.0
        assert c.u2 == -1.0

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            ControllerState(ArmSide.LEFT, u1=float("nan"))
        with pytest.raises(ValueError):
            ControllerState(ArmSide.LEFT, u2=float("inf"))


class TestRecoveryStep:
    def test_within_threshold_snaps_to_live_target(self, rng):
        from telekin.retargeting import ArmRetargetState
        rig = RigConfig.default()
        q_hand = random_quat(rng)
        hand = mk_hand(ArmSide.LEFT, [0.3, 0, 0], q_hand, 0)
        target = natural_orientation(hand, rig)
        # Start a hair inside the threshold.
        from telekin.geometry import quat_about_z, quat_multiply
        near = quat_multiply(target, quat_about_z(rig.recovery_threshold * 0.5))
        arm = ArmRetargetState(held_orientation=near)
        q, done = recovery_step(arm, hand, rig, TICK_DT)
        assert done
        np.testing.assert_array_equal(q, target)

    def test_single_step_moves_fixed_angle(self, rng):
        from telekin.retargeting import ArmRetargetState
        rig = RigConfig.default()
        q_hand = random_quat(rng)
        hand = mk_hand(ArmSide.LEFT, [0.3, 0, 0], q_hand, 0)
        target = natural_orientation(hand, rig)
        from telekin.geometry import quat_about_y, quat_multiply
        far = quat_multiply(target, quat_about_y(1.2))
        arm = ArmRetargetState(held_orientation=far.copy())
        q, done = recovery_step(arm, hand, rig, TICK_DT)
        assert not done
        moved = geodesic_distance(far, q)
        assert moved == pytest.approx(rig.recovery_rate * TICK_DT, abs=1e-9)

    def test_terminates_within_step_budget(self, rng):
        from telekin.retargeting import ArmRetargetState
        rig = RigConfig.default()
        step = rig.recovery_rate * TICK_DT
        for _ in range(50):
            q_hand = random_quat(rng)
            hand = mk_hand(ArmSide.LEFT, [0.3, 0, 0], q_hand, 0)
            target = natural_orientation(hand, rig)
            d0 = float(rng.uniform(0.1, np.pi - 0.1))
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            from telekin.geometry import quat_from_axis_angle, quat_multiply
            start = quat_multiply(target, quat_from_axis_angle(axis, d0))
            arm = ArmRetargetState(held_orientation=start)
            budget = int(np.ceil(d0 / step))
            for i in range(budget):
                _, done = recovery_step(arm, hand, rig, TICK_DT)
                if done:
                    break
            assert done, f"not recovered after {budget} steps from d0={d0}"


def run_scenario(mode_hold_by_tick, n_ticks, u1=0.9, u2=0.0, tick_fn=tick,
                 hand_fn=smooth_hand):
    """Drive both arms with a scripted hold trace; record per-tick commands."""
    ws = default_ws()
    rig = RigConfig.default()
    state = RetargetState()
    log = []
    for k in range(n_ticks):
        hold = mode_hold_by_tick(k)
        hands = {s: hand_fn(s, k) for s in SIDES}
        ctrls = {
            s: ControllerState(s, mode_hold=hold, u1=u1 if hold else 0.0,
                               u2=u2 if hold else 0.0, t_us=t_of(k))
            for s in SIDES
        }
        cmds = tick_fn(hands, ctrls, state, ws, rig, TICK_DT, t_of(k))
        log.append((cmds, {s: state.arm(s).mode for s in SIDES}))
    return log, state, ws, rig


class TestModeAutomaton:
    def test_natural_tracks_live_hand(self):
        log, state, ws, rig = run_scenario(lambda k: False, 30)
        for k, (cmds, modes) in enumerate(log):
            for s in SIDES:
                assert modes[s] is Mode.NATURAL
                hand = smooth_hand(s, k)
                np.testing.assert_allclose(
                    cmds[s].orientation, natural_orientation(hand, rig), atol=1e-12)
                np.testing.assert_allclose(
                    cmds[s].position, natural_position(hand, ws, rig), atol=1e-12)

    def test_engage_boundary_is_bit_identical(self):
        engage = 10
        log, state, ws, rig = run_scenario(lambda k: k >= engage, 20)
        for s in SIDES:
            before = log[engage - 1][0][s].orientation
            at = log[engage][0][s].orientation
            np.testing.assert_array_equal(at, before)
            assert log[engage][1][s] is Mode.JOYSTICK_ASSISTED
            assert log[engage - 1][1][s] is Mode.NATURAL

    def test_position_keeps_following_hand_while_held(self):
        engage = 5
        log, state, ws, rig = run_scenario(lambda k: k >= engage, 30)
        for k in range(engage, 30):
            for s in SIDES:
                hand = smooth_hand(s, k)
                np.testing.assert_allclose(
                    log[k][0][s].position, natural_position(hand, ws, rig),
                    atol=1e-12)

    def test_held_orientation_fixed_with_centered_stick(self):
        engage = 5
        log, state, ws, rig = run_scenario(lambda k: k >= engage, 40, u1=0.0, u2=0.0)
        captured = log[engage][0][ArmSide.LEFT].orientation
        for k in range(engage, 40):
            np.testing.assert_allclose(
                log[k][0][ArmSide.LEFT].orientation, captured, atol=1e-12)

    def test_stick_refinement_matches_matrix_oracle(self):
        engage = 5
        u1, u2 = 0.9, -0.6
        log, state, ws, rig = run_scenario(lambda k: k >= engage, 15, u1=u1, u2=u2)
        th1 = rig.inplane_rate * apply_deadzone(u1, rig.deadzone) * TICK_DT
        th2 = rig.pitch_rate * apply_deadzone(u2, rig.deadzone) * TICK_DT
        for s in SIDES:
            for k in range(engage + 1, 15):
                prev = matrix_from_quat(log[k - 1][0][s].orientation)
                got = matrix_from_quat(log[k][0][s].orientation)
                want = prev @ pitch_rotation(th2) @ inplane_rotation(th1)
                np.testing.assert_allclose(got, want, atol=1e-12, rtol=0)

    def test_release_starts_recovery_same_tick(self):
        engage, release = 5, 60
        log, state, ws, rig = run_scenario(
            lambda k: engage <= k < release, 70, u1=1.0)
        step = rig.recovery_rate * TICK_DT
        for s in SIDES:
            assert log[release - 1][1][s] is Mode.JOYSTICK_ASSISTED
            assert log[release][1][s] in (Mode.RECOVERING, Mode.NATURAL)
            jump = geodesic_distance(log[release - 1][0][s].orientation,
                                     log[release][0][s].orientation)
            assert jump <= step + 1e-9

    def test_recovery_jumps_bounded_every_tick(self):
        engage, release = 5, 60
        log, state, ws, rig = run_scenario(
            lambda k: engage <= k < release, 140, u1=1.0, u2=0.8)
        step = rig.recovery_rate * TICK_DT
        for s in SIDES:
            for k in range(release, 140):
                if log[k][1][s] is not Mode.RECOVERING:
                    continue
                jump = geodesic_distance(log[k - 1][0][s].orientation,
                                         log[k][0][s].orientation)
                assert jump <= step + 1e-9, f"tick {k}: jump {jump}"

    def test_recovery_reaches_natural_and_tracks_again(self):
        engage, release = 5, 60
        log, state, ws, rig = run_scenario(
            lambda k: engage <= k < release, 160, u1=1.0, u2=0.8)
        for s in SIDES:
            recovered = [k for k in range(release, 160)
                         if log[k][1][s] is Mode.NATURAL]
            assert recovered, "never recovered"
            k0 = recovered[0]
            for k in range(k0 + 1, 160):
                hand = smooth_hand(s, k)
                np.testing.assert_allclose(
                    log[k][0][s].orientation, natural_orientation(hand, rig),
                    atol=1e-12)

    def test_reengage_during_recovery_is_seamless(self):
        # Press again mid-recovery: refinement resumes from the interpolated
        # orientation with no orientation discontinuity at the boundary tick.
        engage, release, reengage = 5, 60, 63
        log, state, ws, rig = run_scenario(
            lambda k: (engage <= k < release) or k >= reengage, 80, u1=1.0)
        for s in SIDES:
            assert log[reengage - 1][1][s] is Mode.RECOVERING
            assert log[reengage][1][s] is Mode.JOYSTICK_ASSISTED
            np.testing.assert_array_equal(log[reengage][0][s].orientation,
                                          log[reengage - 1][0][s].orientation)

    def test_quick_release_with_centered_stick_counts_two_switches(self):
        # Hold without deflecting, release: distance is inside the snap
        # threshold so the arm passes through recovery within a single tick.
        engage, release = 5, 8
        log, state, ws, rig = run_scenario(
            lambda k: engage <= k < release, 12, u1=0.0, u2=0.0)
        assert log[release][1][ArmSide.LEFT] is Mode.NATURAL
        # enter + exit for each of the two arms
        assert state.mode_switch_count == 4

    def test_full_cycle_counts_three_switches_per_arm(self):
        engage, release = 5, 60
        log, state, ws, rig = run_scenario(
            lambda k: engage <= k < release, 160, u1=1.0, u2=0.8)
        assert state.mode_switch_count == 6


class TestStaleHandling:
    def test_no_hand_ever_gives_rest_command(self):
        ws, rig, state = default_ws(), RigConfig.default(), RetargetState()
        cmds = tick({}, {}, state, ws, rig, TICK_DT, t_of(0))
        for s in SIDES:
            np.testing.assert_array_equal(cmds[s].position, rig.rest_position)
            np.testing.assert_array_equal(cmds[s].orientation, identity_quat())
            assert not cmds[s].grip_close
            assert state.arm(s).stale

    def test_stale_stream_repeats_last_command_retimed(self):
        ws, rig, state = default_ws(), RigConfig.default(), RetargetState()
        hands = {s: smooth_hand(s, 0) for s in SIDES}
        first = tick(hands, {}, state, ws, rig, TICK_DT, t_of(0))
        # No fresher hand arrives; jump past the staleness horizon.
        k_late = 60  # 1 s later with a 0.25 s horizon
        cmds = tick(hands, {}, state, ws, rig, TICK_DT, t_of(k_late))
        for s in SIDES:
            assert state.arm(s).stale
            np.testing.assert_array_equal(cmds[s].position, first[s].position)
            np.testing.assert_array_equal(cmds[s].orientation,
                                          first[s].orientation)
            assert cmds[s].t_us == t_of(k_late)

    def test_grip_passthrough_while_stale(self):
        ws, rig, state = default_ws(), RigConfig.default(), RetargetState()
        hands = {s: smooth_hand(s, 0) for s in SIDES}
        tick(hands, {}, state, ws, rig, TICK_DT, t_of(0))
        ctrls = {s: ControllerState(s, grip_close=True, t_us=t_of(60))
                 for s in SIDES}
        cmds = tick(hands, ctrls, state, ws, rig, TICK_DT, t_of(60))
        for s in SIDES:
            assert state.arm(s).stale
            assert cmds[s].grip_close

    def test_hold_press_during_staleness_does_not_engage(self):
        ws, rig, state = default_ws(), RigConfig.default(), RetargetState()
        hands = {s: smooth_hand(s, 0) for s in SIDES}
        tick(hands, {}, state, ws, rig, TICK_DT, t_of(0))
        ctrls = {s: ControllerState(s, mode_hold=True, t_us=t_of(60))
                 for s in SIDES}
        tick(hands, ctrls, state, ws, rig, TICK_DT, t_of(60))
        for s in SIDES:
            assert state.arm(s).mode is Mode.NATURAL
            assert not state.arm(s).prev_mode_hold
        # Stream resumes with the button still down: the edge fires now.
        hands2 = {s: smooth_hand(s, 61) for s in SIDES}
        ctrls2 = {s: ControllerState(s, mode_hold=True, t_us=t_of(61))
                  for s in SIDES}
        tick(hands2, ctrls2, state, ws, rig, TICK_DT, t_of(61))
        for s in SIDES:
            assert state.arm(s).mode is Mode.JOYSTICK_ASSISTED

    def test_freshness_window_boundary(self):
        ws, rig, state = default_ws(), RigConfig.default(), RetargetState()
        hand = smooth_hand(ArmSide.LEFT, 0)
        hands = {ArmSide.LEFT: hand, ArmSide.RIGHT: smooth_hand(ArmSide.RIGHT, 0)}
        # Exactly at the horizon: still fresh (strictly-older-than rule).
        tick(hands, {}, state, ws, rig, TICK_DT, hand.t_us + rig.stale_after_us)
        assert not state.arm(ArmSide.LEFT).stale
        tick(hands, {}, state, ws, rig, TICK_DT, hand.t_us + rig.stale_after_us + 1)
        assert state.arm(ArmSide.LEFT).stale


class TestClamping:
    def test_out_of_reach_hand_is_clamped_to_sphere(self):
        ws, rig, state = default_ws(), RigConfig.default(), RetargetState()
        far = mk_hand(ArmSide.LEFT, [0.9, 0.0, 0.0], identity_quat(), t_of(0))
        hands = {ArmSide.LEFT: far, ArmSide.RIGHT: smooth_hand(ArmSide.RIGHT, 0)}
        cmds = tick(hands, {}, state, ws, rig, TICK_DT, t_of(0))
        cmd = cmds[ArmSide.LEFT]
        assert cmd.clamped
        assert np.linalg.norm(cmd.position) == pytest.approx(
            ws.robot_reach, abs=1e-12)

    def test_in_reach_hand_not_clamped(self):
        ws, rig, state = default_ws(), RigConfig.default(), RetargetState()
        hands = {s: smooth_hand(s, 0) for s in SIDES}
        cmds = tick(hands, {}, state, ws, rig, TICK_DT, t_of(0))
        assert not cmds[ArmSide.LEFT].clamped


class TestNaturalOnlyBaseline:
    def test_ignores_hold_and_sticks(self):
        n = 40
        log_quiet, _, ws, rig = run_scenario(lambda k: False, n,
                                             tick_fn=natural_tick)
        log_busy, _, _, _ = run_scenario(lambda k: k >= 5, n, u1=1.0, u2=-1.0,
                                         tick_fn=natural_tick)
        for k in range(n):
            for s in SIDES:
                a, b = log_quiet[k][0][s], log_busy[k][0][s]
                np.testing.assert_array_equal(a.position, b.position)
                np.testing.assert_array_equal(a.orientation, b.orientation)
                assert a.t_us == b.t_us

    def test_matches_natural_mapping_every_tick(self):
        log, state, ws, rig = run_scenario(lambda k: k >= 5, 30, u1=1.0,
                                           tick_fn=natural_tick)
        for k, (cmds, _) in enumerate(log):
            for s in SIDES:
                hand = smooth_hand(s, k)
                np.testing.assert_allclose(
                    cmds[s].orientation, natural_orientation(hand, rig),
                    atol=1e-12)
        assert state.mode_switch_count == 0


class TestRelativeBaseline:
    def test_frozen_until_first_engage(self):
        log, state, ws, rig = run_scenario(lambda k: False, 20,
                                           tick_fn=relative_tick)
        for cmds, _ in log:
            for s in SIDES:
                np.testing.assert_array_equal(cmds[s].position,
                                              rig.rest_position)
                np.testing.assert_array_equal(cmds[s].orientation,
                                              identity_quat())

    def test_engaged_delta_oracle(self):
        engage = 5
        log, state, ws, rig = run_scenario(lambda k: k >= engage, 40,
                                           tick_fn=relative_tick)
        for s in SIDES:
            anchor_hand = smooth_hand(s, engage)
            anchor_cmd = log[engage - 1][0][s]
            for k in range(engage, 40):
                hand = smooth_hand(s, k)
                delta = hand.pose.position - anchor_hand.pose.position
                want_p = anchor_cmd.position + ws.scaling * delta
                np.testing.assert_allclose(log[k][0][s].position, want_p,
                                           atol=1e-12, rtol=0)
                want_r = (matrix_from_quat(anchor_cmd.orientation)
                          @ matrix_from_quat(anchor_hand.pose.orientation).T
                          @ matrix_from_quat(hand.pose.orientation))
                np.testing.assert_allclose(
                    matrix_from_quat(log[k][0][s].orientation), want_r,
                    atol=1e-12, rtol=0)

    def test_engage_tick_starts_exactly_at_anchor(self):
        engage = 5
        log, state, ws, rig = run_scenario(lambda k: k >= engage, 10,
                                           tick_fn=relative_tick)
        for s in SIDES:
            np.testing.assert_array_equal(log[engage][0][s].position,
                                          log[engage - 1][0][s].position)
            np.testing.assert_allclose(log[engage][0][s].orientation,
                                       log[engage - 1][0][s].orientation,
                                       atol=1e-12)

    def test_disengage_freezes_pose(self):
        engage, release = 5, 20
        log, state, ws, rig = run_scenario(
            lambda k: engage <= k < release, 40, tick_fn=relative_tick)
        for s in SIDES:
            frozen = log[release - 1][0][s]
            for k in range(release, 40):
                cmd = log[k][0][s]
                np.testing.assert_array_equal(cmd.position, frozen.position)
                np.testing.assert_array_equal(cmd.orientation, frozen.orientation)
                assert cmd.t_us == t_of(k)

    def test_reengage_anchors_from_frozen_pose(self):
        engage, release, reengage = 5, 20, 30
        log, state, ws, rig = run_scenario(
            lambda k: (engage <= k < release) or k >= reengage, 50,
            tick_fn=relative_tick)
        for s in SIDES:
            frozen = log[reengage - 1][0][s]
            anchor_hand = smooth_hand(s, reengage)
            for k in range(reengage, 50):
                hand = smooth_hand(s, k)
                delta = hand.pose.position - anchor_hand.pose.position
                want_p = frozen.position + ws.scaling * delta
                np.testing.assert_allclose(log[k][0][s].position, want_p,
                                           atol=1e-12, rtol=0)

    def test_grip_follows_controller_even_while_frozen(self):
        ws, rig, state = default_ws(), RigConfig.default(), RetargetState()
        hands = {s: smooth_hand(s, 0) for s in SIDES}
        ctrls = {s: ControllerState(s, grip_close=True, t_us=t_of(0))
                 for s in SIDES}
        cmds = relative_tick(hands, ctrls, state, ws, rig, TICK_DT, t_of(0))
        for s in SIDES:
            assert cmds[s].grip_close
