"""Tests for the overtaking and parking state machines."""

import math

import numpy as np
import pytest

from src.minicar.behavior import (
    OvertakeMachine,
    ParkMachine,
    best_fit_select,
    overtake_tick,
    park_tick,
    passing_command,
    plan_parking_trajectory,
    plausibility_check,
)
from src.minicar.core.models import (
    ControlCommand,
    EventKind,
    GapCandidate,
    GapSearchConfig,
    LaneId,
    OvertakeConfig,
    OvertakePhase,
    OvertakeState,
    ParkPhase,
    ParkState,
    PlausibilityVerdict,
    SearchStrategy,
    SensorReading,
    Termination,
    VehicleParams,
    VehicleState,
)
from src.minicar.dynamics import step
from src.minicar.sensors import US_FRONT_RIGHT, RayCaster, default_sensor_suite, sweep_drive_line
from src.minicar.track import parse_track

LANE = ControlCommand(steering=0.01, speed=1.0)
PERIOD = 0.025
NONE = -1.0


def _r(d, sensor_id="s"):
    return SensorReading(sensor_id=sensor_id, d=d)


@pytest.fixture(scope="module")
def trajectory():
    return plan_parking_trajectory(VehicleParams(), lateral_shift=0.34, sensor_offset=0.30)


def _park_cfg(trajectory, **kwargs):
    return GapSearchConfig(trajectory=trajectory, **kwargs)


def _drive(machine, echo_at, ticks=5000, kappa=None):
    """Integrate commanded speed into the odometer; return the final odometer."""
    odo, t = 0.0, 0.0
    for _ in range(ticks):
        d = 0.2 if echo_at(odo) else NONE
        cmd = machine.tick(t, _r(d, "us_front_right"), odo, LANE, kappa)
        if machine.state.terminal:
            break
        odo += abs(cmd.speed) * PERIOD
        t += PERIOD
    return odo


def _phases(machine):
    return [tr.to_phase for tr in machine.transitions]


class TestPlausibility:
    """Test the front object plausibility check."""

    def test_closing_object_accepted_when_full(self):
        cfg = OvertakeConfig()
        verdict = plausibility_check([0.8, 0.75, 0.7, 0.65, 0.6], 0.1, cfg)
        assert verdict == PlausibilityVerdict.ACCEPT
        assert plausibility_check([0.8, 0.75, 0.7], 0.1, cfg) == PlausibilityVerdict.PENDING

    def test_receding_object_rejected(self):
        verdict = plausibility_check([0.5, 0.6, 0.7], 0.1, OvertakeConfig())
        assert verdict == PlausibilityVerdict.REJECT

    def test_sentinels_keep_their_slot(self):
        cfg = OvertakeConfig()
        window = [0.8, NONE, 0.7, NONE, 0.6]
        assert plausibility_check(window, 0.1, cfg) == PlausibilityVerdict.PENDING
        # 0.8 -> 0.6 over four slots is still a closing object
        assert plausibility_check([0.8, NONE, 0.6], 0.1, cfg) == PlausibilityVerdict.PENDING

    def test_single_dropout_in_full_window_accepted(self):
        window = [0.8, NONE, 0.7, 0.65, 0.6]
        assert plausibility_check(window, 0.1, OvertakeConfig()) == PlausibilityVerdict.ACCEPT
        strict = OvertakeConfig(min_echoes=5)
        assert plausibility_check(window, 0.1, strict) == PlausibilityVerdict.PENDING

    def test_min_echoes_cannot_exceed_window(self):
        with pytest.raises(ValueError, match="min_echoes"):
            OvertakeConfig(window=3, min_echoes=4)

    def test_stationary_far_object_pending(self):
        window = [0.95] * 5
        assert plausibility_check(window, 0.1, OvertakeConfig()) == PlausibilityVerdict.PENDING

    def test_empty_window(self):
        with pytest.raises(ValueError):
            plausibility_check([], 0.1, OvertakeConfig())


class TestOvertakeMachine:
    """Test a full scripted overtaking maneuver."""

    def test_full_maneuver_replays_counters(self):
        cfg = OvertakeConfig()
        machine = OvertakeMachine(cfg)
        left = ControlCommand(steering=cfg.max_steer_left, speed=cfg.maneuver_speed)
        right = ControlCommand(steering=-cfg.max_steer_right, speed=cfg.maneuver_speed)
        passing = ControlCommand(steering=LANE.steering, speed=cfg.maneuver_speed)

        # (us_front, us_front_right, ir_front, ir_rear) -> expected command
        script = [
            ((0.8, NONE, NONE, NONE), LANE),
            ((0.75, NONE, NONE, NONE), LANE),
            ((0.7, NONE, NONE, NONE), LANE),
            ((0.65, NONE, NONE, NONE), LANE),
            ((0.6, NONE, NONE, NONE), left),
            ((0.55, NONE, NONE, NONE), left),
            ((NONE, NONE, NONE, NONE), left),
            ((NONE, NONE, 0.30, 0.25), right),
            ((NONE, NONE, 0.28, 0.26), right),
            ((NONE, NONE, 0.27, 0.27), passing),
            ((NONE, 0.3, 0.27, 0.27), passing),
            ((NONE, NONE, NONE, NONE), passing),
            ((NONE, NONE, NONE, NONE), passing),
            ((NONE, NONE, NONE, NONE), right),
            ((NONE, NONE, NONE, NONE), right),
            ((NONE, NONE, NONE, NONE), left),
            ((NONE, NONE, NONE, NONE), left),
            ((NONE, NONE, NONE, NONE), left),
            ((NONE, NONE, NONE, NONE), LANE),
        ]
        for i, (readings, expected) in enumerate(script):
            cmd = machine.tick(0.1 * i, *(_r(d) for d in readings), LANE)
            assert cmd == expected, f"tick {i}: {machine.state.phase}"
            if i == 9:
                assert (machine.state.counter_left, machine.state.counter_right) == (3, 2)

        assert machine.state == OvertakeState()
        assert _phases(machine) == [
            OvertakePhase.CHECK_OBJECT_PLAUSIBLE.value,
            OvertakePhase.TO_LEFT_LANE_LEFT_TURN.value,
            OvertakePhase.ALIGN_RIGHT_TURN.value,
            OvertakePhase.PASS_OBSTACLE.value,
            OvertakePhase.RETURN_RIGHT_TURN.value,
            OvertakePhase.RETURN_LEFT_TURN.value,
            OvertakePhase.MOVE_FORWARD.value,
        ]

    def test_receding_object_returns_to_lane_following(self):
        s = OvertakeState()
        s, cmd = overtake_tick(s, _r(0.5), _r(NONE), _r(NONE), _r(NONE), LANE)
        assert s.phase == OvertakePhase.CHECK_OBJECT_PLAUSIBLE
        s, cmd = overtake_tick(s, _r(0.6), _r(NONE), _r(NONE), _r(NONE), LANE)
        assert s.phase == OvertakePhase.MOVE_FORWARD
        assert s.window == []
        assert cmd == LANE

    def test_lost_object(self):
        s, _ = overtake_tick(OvertakeState(), _r(0.8), _r(NONE), _r(NONE), _r(NONE), LANE)
        assert s.phase == OvertakePhase.CHECK_OBJECT_PLAUSIBLE
        for _ in range(5):
            s, _ = overtake_tick(s, _r(NONE), _r(NONE), _r(NONE), _r(NONE), LANE)
        assert s.phase == OvertakePhase.MOVE_FORWARD

    def test_alignment_sign_change_ends_turn(self):
        cfg = OvertakeConfig()
        s = OvertakeState(phase=OvertakePhase.ALIGN_RIGHT_TURN, counter_left=2)
        s, _ = overtake_tick(s, _r(NONE), _r(NONE), _r(0.30), _r(0.25), LANE, cfg)
        assert s.phase == OvertakePhase.ALIGN_RIGHT_TURN
        assert s.ir_armed
        s, cmd = overtake_tick(s, _r(NONE), _r(NONE), _r(0.25), _r(0.28), LANE, cfg)
        assert s.phase == OvertakePhase.PASS_OBSTACLE
        assert s.counter_right == 1
        assert not s.ir_armed
        assert cmd == ControlCommand(steering=LANE.steering, speed=cfg.maneuver_speed)

    def test_equal_readings_before_arming_keep_turning(self):
        cfg = OvertakeConfig()
        s = OvertakeState(phase=OvertakePhase.ALIGN_RIGHT_TURN, counter_left=2)
        s, cmd = overtake_tick(s, _r(NONE), _r(NONE), _r(0.27), _r(0.27), LANE, cfg)
        assert s.phase == OvertakePhase.ALIGN_RIGHT_TURN
        assert not s.ir_armed
        assert s.counter_right == 1
        assert cmd == ControlCommand(steering=-cfg.max_steer_right, speed=cfg.maneuver_speed)

    def test_turn_ends_once_heading_is_restored(self):
        cfg = OvertakeConfig(reversal_ticks=3)
        machine = OvertakeMachine(cfg)
        machine.state = OvertakeState(phase=OvertakePhase.ALIGN_RIGHT_TURN, counter_left=4)
        silent = [_r(NONE)] * 4
        for _ in range(7):
            machine.tick(0.0, *silent, LANE)
            assert machine.state.phase == OvertakePhase.ALIGN_RIGHT_TURN
        machine.tick(0.7, *silent, LANE)
        assert machine.state.phase == OvertakePhase.PASS_OBSTACLE
        assert machine.state.counter_right == 7
        assert machine.transitions[-1].trigger == "counter_right=7"

    def test_pass_ends_without_seeing_the_obstacle(self):
        cfg = OvertakeConfig(pass_exit_samples=3)
        s = OvertakeState(phase=OvertakePhase.PASS_OBSTACLE, counter_left=2, counter_right=1)
        for misses in (1, 2):
            s, _ = overtake_tick(s, _r(NONE), _r(NONE), _r(NONE), _r(NONE), LANE, cfg)
            assert s.phase == OvertakePhase.PASS_OBSTACLE
            assert s.pass_misses == misses
        s, cmd = overtake_tick(s, _r(NONE), _r(NONE), _r(NONE), _r(NONE), LANE, cfg)
        assert s.phase == OvertakePhase.RETURN_RIGHT_TURN
        assert s.counter_right == 0
        assert cmd.steering == -cfg.max_steer_right

    def test_echo_restarts_the_pass_count(self):
        s = OvertakeState(phase=OvertakePhase.PASS_OBSTACLE, pass_misses=2)
        s, _ = overtake_tick(s, _r(NONE), _r(0.25), _r(NONE), _r(NONE), LANE)
        assert s.phase == OvertakePhase.PASS_OBSTACLE
        assert s.pass_misses == 0

    def test_passing_speed_is_capped(self):
        cfg = OvertakeConfig(maneuver_speed=0.3)
        assert passing_command(LANE, cfg) == ControlCommand(steering=0.01, speed=0.3)
        slow = ControlCommand(steering=-0.02, speed=0.2)
        assert passing_command(slow, cfg) == slow

        machine = OvertakeMachine(cfg)
        assert machine.lane_command(LANE) == LANE
        machine.state = OvertakeState(phase=OvertakePhase.PASS_OBSTACLE)
        assert machine.lane_command(LANE).speed == 0.3

    def test_far_object_ignored(self):
        s, cmd = overtake_tick(OvertakeState(), _r(1.5), _r(NONE), _r(NONE), _r(NONE), LANE)
        assert s.phase == OvertakePhase.MOVE_FORWARD
        assert cmd == LANE


class TestParkingTrajectory:
    """Test the two-arc trajectory plan."""

    def test_shift_from_equal_arcs(self, trajectory):
        theta = math.acos(1.0 - 0.34 / 1.4)
        assert trajectory.arc_right == pytest.approx(0.7 * theta)
        assert trajectory.arc_left == pytest.approx(0.7 * theta)
        assert trajectory.longitudinal_shift == pytest.approx(1.4 * math.sin(theta))

    def test_bicycle_follows_plan(self, trajectory):
        params = VehicleParams()
        speed = -0.3
        state = VehicleState(speed=speed, steering=-params.max_steer_right)
        for delta, length in (
            (-params.max_steer_right, trajectory.arc_right),
            (params.max_steer_left, trajectory.arc_left),
        ):
            state = state.model_copy(update={"steering": delta})
            cmd = ControlCommand(steering=delta, speed=speed)
            for _ in range(int(round(length / (abs(speed) * 0.005)))):
                state = step(state, cmd, params, 0.005)
        assert state.y == pytest.approx(-0.34, abs=5e-3)
        assert state.x == pytest.approx(-trajectory.longitudinal_shift, abs=5e-3)
        assert state.heading == pytest.approx(0.0, abs=1e-2)

    def test_unreachable_shift(self):
        with pytest.raises(ValueError, match="lateral shift"):
            plan_parking_trajectory(VehicleParams(), lateral_shift=1.5, sensor_offset=0.3)

    def test_advance_centers_the_body(self, trajectory):
        advance = trajectory.advance_for(1.0, 0.05)
        assert advance == pytest.approx(0.30 - 0.5 - 0.13 + trajectory.longitudinal_shift + 0.05)


class TestBestFit:
    """Test gap selection."""

    def test_narrowest_feasible(self):
        gaps = [
            GapCandidate(start=0.0, end=0.6),
            GapCandidate(start=1.0, end=1.9),
            GapCandidate(start=2.0, end=2.55),
            GapCandidate(start=3.0, end=3.45),
        ]
        assert best_fit_select(gaps, 0.5) == gaps[2]

    def test_earliest_wins_ties(self):
        gaps = [GapCandidate(start=2.0, end=2.75), GapCandidate(start=0.5, end=1.25)]
        assert best_fit_select(gaps, 0.5) == gaps[1]

    def test_nothing_feasible(self):
        assert best_fit_select([GapCandidate(start=0.0, end=0.3)], 0.5) is None
        assert best_fit_select([]) is None


class TestParkMachine:
    """Test the parking machine against a scripted odometer plant."""

    def test_first_fit_parks(self, trajectory):
        machine = ParkMachine(_park_cfg(trajectory))
        _drive(machine, lambda odo: odo < 0.5 or odo >= 1.5)

        assert machine.state.phase == ParkPhase.DONE
        assert _phases(machine) == [
            ParkPhase.FIND_BEGINNING_OF_GAP.value,
            ParkPhase.FIND_END_OF_GAP.value,
            ParkPhase.ADVANCE_TO_START.value,
            ParkPhase.TRAJECTORY.value,
            ParkPhase.DONE.value,
        ]
        assert machine.measured_gap.width == pytest.approx(1.0, abs=0.03)
        assert EventKind.PARKED in machine.events

        marks = machine.state.tr_marks
        assert len(marks) == 5
        assert marks[2] - marks[1] == pytest.approx(trajectory.arc_right, abs=2e-3)
        assert marks[4] - marks[3] == pytest.approx(trajectory.arc_left, abs=2e-3)
        # steering settles without moving
        assert marks[1] == marks[0]
        assert marks[3] == marks[2]

    def test_reverse_start_point(self, trajectory):
        cfg = _park_cfg(trajectory)
        machine = ParkMachine(cfg)
        _drive(machine, lambda odo: odo < 0.5 or odo >= 1.5)
        gap = machine.state.chosen
        target = gap.end + trajectory.advance_for(gap.width, cfg.short_advance)
        assert machine.state.tr_marks[0] == pytest.approx(target, abs=2e-3)

    def test_narrow_gap_rejected(self, trajectory):
        machine = ParkMachine(_park_cfg(trajectory, total_distance=2.0))
        _drive(machine, lambda odo: not 0.5 <= odo < 0.8)
        assert machine.state.phase == ParkPhase.FAILED
        assert EventKind.PARK_FAILED in machine.events
        assert ParkPhase.ADVANCE_TO_START.value not in _phases(machine)
        assert _phases(machine)[:3] == [
            ParkPhase.FIND_BEGINNING_OF_GAP.value,
            ParkPhase.FIND_END_OF_GAP.value,
            ParkPhase.TRIGGER_MEASUREMENTS.value,
        ]

    def test_no_gap_fails_after_total_distance(self, trajectory):
        machine = ParkMachine(_park_cfg(trajectory, total_distance=2.0))
        odo = _drive(machine, lambda odo: True)
        assert machine.state.phase == ParkPhase.FAILED
        assert odo == pytest.approx(2.0, abs=0.03)

    def test_curve_ends_search(self, trajectory):
        cfg = _park_cfg(trajectory, termination=Termination.CURVE_BEGIN, curve_frames=3)
        machine = ParkMachine(cfg)
        _drive(machine, lambda odo: True, kappa=1e-3)
        assert machine.state.phase == ParkPhase.FAILED
        assert machine.state.curve_frames == 3

    def test_best_fit_returns_to_narrowest_gap(self, trajectory):
        cfg = _park_cfg(trajectory, strategy=SearchStrategy.BEST_FIT, total_distance=4.0)
        machine = ParkMachine(cfg)
        odo, t, reversed_while_advancing = 0.0, 0.0, False

        def echo(o):
            return o < 0.5 or 1.5 <= o < 2.0 or o >= 2.7

        for _ in range(5000):
            d = 0.2 if echo(odo) else NONE
            cmd = machine.tick(t, _r(d), odo, LANE)
            if machine.state.phase == ParkPhase.ADVANCE_TO_START and cmd.speed < 0.0:
                reversed_while_advancing = True
            if machine.state.terminal:
                break
            odo += abs(cmd.speed) * PERIOD
            t += PERIOD

        assert machine.state.phase == ParkPhase.DONE
        assert len(machine.state.found_gaps) == 2
        assert machine.state.chosen.width == pytest.approx(0.7, abs=0.03)
        assert reversed_while_advancing

    @pytest.mark.parametrize("strategy", [SearchStrategy.FIRST_FIT, SearchStrategy.BEST_FIT])
    def test_quantized_odometer_waits_for_standstill(self, trajectory, strategy):
        cfg = _park_cfg(trajectory, strategy=strategy, total_distance=4.0)
        machine = ParkMachine(cfg)
        tick, accel = 0.01, 2.5
        odo, v, t = 0.0, 0.0, 0.0
        speeds = []

        def echo(o):
            return o < 0.5 or 1.5 <= o < 2.0 or o >= 2.7

        for _ in range(8000):
            d = 0.2 if echo(odo) else NONE
            reading = math.floor(odo / tick + 1e-9) * tick
            before = (len(machine.state.tr_marks), machine.state.move_target)
            cmd = machine.tick(t, _r(d), reading, LANE)
            after = (len(machine.state.tr_marks), machine.state.move_target)
            if after[0] > before[0] or (before[1] is not None and after[1] is None):
                speeds.append(v)
            if machine.state.terminal:
                break
            v += max(-accel * PERIOD, min(accel * PERIOD, cmd.speed - v))
            odo += abs(v) * PERIOD
            t += PERIOD

        assert machine.state.phase == ParkPhase.DONE
        assert len(machine.state.tr_marks) == 5
        # every step that relies on standstill saw the plant at rest
        assert speeds and all(s == 0.0 for s in speeds)

    def test_passthrough_while_searching(self, trajectory):
        cfg = _park_cfg(trajectory)
        s, cmd = park_tick(ParkState(), _r(0.2), 0.0, LANE, cfg)
        assert s.passthrough
        assert cmd == LANE
        s, cmd = park_tick(s, _r(NONE), 0.1, LANE, cfg)
        assert s.phase == ParkPhase.FIND_BEGINNING_OF_GAP
        assert s.odo_mark_1 == 0.1
        assert cmd == LANE

    def test_terminal_states_stop(self, trajectory):
        cfg = _park_cfg(trajectory)
        _, cmd = park_tick(ParkState(phase=ParkPhase.DONE), _r(0.2), 1.0, LANE, cfg)
        assert cmd == ControlCommand(steering=0.0, speed=0.0)

    def test_needs_trajectory(self):
        with pytest.raises(ValueError, match="trajectory"):
            ParkMachine(GapSearchConfig())


def _random_strip(rng):
    lines = ["start 0 0 0", "segment straight 12", "parking_strip 0"]
    end = 1.0
    spans = []
    for i in range(5):
        gap = 0.0 if i == 0 else float(rng.uniform(0.3, 1.3))
        length = float(rng.uniform(0.3, 0.5))
        lines.append(f"parkbox {end!r} {gap!r} 0.2 {length!r} 0.05")
        spans.append((end + gap, end + gap + length))
        end += gap + length
    return parse_track("\n".join(lines) + "\n"), end


@pytest.mark.slow
class TestGapMeasurement:
    """Measured gaps against the drive-line sweep on randomized strips."""

    def test_matches_drive_line_sweep(self, trajectory):
        dt, speed = 0.005, 0.5
        sensor = default_sensor_suite()[US_FRONT_RIGHT]
        cfg = _park_cfg(trajectory, strategy=SearchStrategy.BEST_FIT, total_distance=100.0)
        us_ticks = int(round(sensor.period / dt))
        behavior_ticks = int(round(cfg.period / dt))
        # a sample can arrive up to one sensor period and one behavior tick late
        tol = speed * (sensor.period + cfg.period) + 0.005
        rng = np.random.default_rng(2024)
        checked = 0

        for _ in range(50):
            track, strip_end = _random_strip(rng)
            caster = RayCaster(track)
            machine = ParkMachine(cfg)
            reading = _r(NONE)
            k = 0
            while speed * k * dt < strip_end + 0.5:
                t = k * dt
                state = VehicleState(x=speed * t)
                if k % us_ticks == 0:
                    reading = caster.distance(sensor, state, t)
                if k % behavior_ticks == 0:
                    machine.tick(t, reading, speed * t, LANE)
                k += 1
            measured = machine.state.found_gaps

            oracle = sweep_drive_line(track, sensor, LaneId.RIGHT, 0.0, strip_end + 0.5, 0.005)
            for gap in oracle:
                if abs(gap.width - cfg.min_gap) <= tol:
                    continue
                matches = [m for m in measured if abs(m.start - gap.start) <= tol]
                if gap.width > cfg.min_gap:
                    assert len(matches) == 1
                    assert matches[0].width == pytest.approx(gap.width, abs=tol)
                else:
                    assert matches == []
                checked += 1
            for m in measured:
                assert any(abs(m.start - gap.start) <= tol for gap in oracle)

        assert checked > 100
