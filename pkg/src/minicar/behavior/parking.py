"""Sideways parking: gap measurement from the front-right ultrasonic sensor and
a static two-arc reverse trajectory.

The machine runs at 40 Hz while the ultrasonic sensor only refreshes every
70 ms, so gap edges are detected against the last seen value rather than the
last sample. A gap is the odometer distance between the end of one object
(echo to no echo) and the start of the next (no echo to echo).
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

from ..core.models import (
    ControlCommand,
    EventKind,
    GapCandidate,
    GapSearchConfig,
    ParkingTrajectory,
    ParkPhase,
    ParkState,
    PhaseTransition,
    SearchStrategy,
    SensorReading,
    Termination,
    TrajectoryStep,
    VehicleParams,
)

logger = logging.getLogger(__name__)

MACHINE_NAME = "park"

STOP = ControlCommand(steering=0.0, speed=0.0)


def plan_parking_trajectory(
    params: VehicleParams, lateral_shift: float, sensor_offset: float
) -> ParkingTrajectory:
    """Two equal-angle arcs at minimum turning radius, first right then left.

    Reversing through both arcs moves the rear axle ``lateral_shift`` to the
    right and ``(R1 + R2)·sin θ`` backward while restoring the heading.

    Raises:
        ValueError: If the shift cannot be reached with two arcs.
    """
    r_right = params.wheelbase / math.tan(params.max_steer_right)
    r_left = params.wheelbase / math.tan(params.max_steer_left)
    total = r_right + r_left
    if not 0.0 < lateral_shift < total:
        raise ValueError(
            f"lateral shift must lie in (0, {total:.3f}) m for these turning radii "
            f"(got {lateral_shift:.3f})"
        )
    theta = math.acos(1.0 - lateral_shift / total)
    return ParkingTrajectory(
        arc_right=r_right * theta,
        arc_left=r_left * theta,
        longitudinal_shift=total * math.sin(theta),
        lateral_shift=lateral_shift,
        sensor_offset=sensor_offset,
        body_center_offset=params.body_center_offset,
    )


def best_fit_select(
    found: Sequence[GapCandidate], min_gap: float = 0.0
) -> Optional[GapCandidate]:
    """Narrowest gap at least ``min_gap`` wide; earliest start wins ties."""
    feasible = [g for g in found if g.width >= min_gap]
    if not feasible:
        return None
    return min(feasible, key=lambda g: (g.width, g.start))


def _approach_speed(remaining: float, nominal: float, cfg: GapSearchConfig) -> float:
    return max(cfg.creep_speed, min(nominal, cfg.stop_gain * remaining))


Transition = Tuple[ParkPhase, ParkPhase, str]
GoFn = Callable[..., ParkState]


def _step(
    s: ParkState,
    d_u: SensorReading,
    odometer: float,
    stopped: bool,
    lane_cmd: ControlCommand,
    cfg: GapSearchConfig,
    kappa: Optional[float],
    transitions: List[Transition],
    events: List[EventKind],
) -> Tuple[ParkState, ControlCommand]:
    traj = cfg.trajectory
    if traj is None:
        raise ValueError("gap search config needs a parking trajectory")

    def go(phase: ParkPhase, trigger: str, **changes: object) -> ParkState:
        transitions.append((s.phase, phase, trigger))
        return s.model_copy(update={"phase": phase, **changes})

    phase = s.phase
    if phase in (ParkPhase.DONE, ParkPhase.FAILED):
        return s, STOP

    if s.passthrough:
        if kappa is not None:
            frames = s.curve_frames + 1 if abs(kappa) > cfg.curve_threshold else 0
            s = s.model_copy(update={"curve_frames": frames})
        reason = None
        if cfg.termination == Termination.TOTAL_DISTANCE and odometer > cfg.total_distance:
            reason = f"odometer {odometer:.3f} > {cfg.total_distance:g}"
        elif cfg.termination == Termination.CURVE_BEGIN and s.curve_frames >= cfg.curve_frames:
            reason = f"curve for {s.curve_frames} frames"
        if reason is not None and phase != ParkPhase.FIND_END_OF_GAP:
            return _terminate(s, traj, cfg, reason, go, events)

    last = s.last_d_u
    d = d_u.d

    if phase == ParkPhase.TRIGGER_MEASUREMENTS:
        if last is not None and last > 0.0 and d < 0.0:
            s = go(
                ParkPhase.FIND_BEGINNING_OF_GAP,
                "d_U>0 -> d_U<0",
                odo_mark_1=odometer,
                odo_mark_2=None,
                measuring=True,
            )
        return s.model_copy(update={"last_d_u": d}), lane_cmd

    if phase == ParkPhase.FIND_BEGINNING_OF_GAP:
        if last is not None and last < 0.0 and d > 0.0:
            s = go(
                ParkPhase.FIND_END_OF_GAP,
                "d_U<0 -> d_U>0",
                odo_mark_2=odometer,
                measuring=False,
            )
        return s.model_copy(update={"last_d_u": d}), lane_cmd

    if phase == ParkPhase.FIND_END_OF_GAP:
        gap = GapCandidate(start=s.odo_mark_1, end=s.odo_mark_2)  # type: ignore[arg-type]
        s = s.model_copy(update={"last_d_u": d})
        logger.debug(f"Measured gap {gap.width:.3f} m (minimum {cfg.min_gap:.3f} m)")
        if gap.width < cfg.min_gap:
            return go(ParkPhase.TRIGGER_MEASUREMENTS, f"gap {gap.width:.3f} too small"), lane_cmd
        events.append(EventKind.GAP_FOUND)
        if cfg.strategy == SearchStrategy.BEST_FIT:
            s = s.model_copy(update={"found_gaps": list(s.found_gaps) + [gap]})
            return go(ParkPhase.TRIGGER_MEASUREMENTS, f"gap {gap.width:.3f} recorded"), lane_cmd
        target = gap.end + traj.advance_for(gap.width, cfg.short_advance)
        s = go(
            ParkPhase.ADVANCE_TO_START,
            f"gap {gap.width:.3f} accepted",
            chosen=gap,
            move_start=odometer,
            move_distance=target - odometer,
        )
        return _step(s, d_u, odometer, False, lane_cmd, cfg, None, transitions, events)

    if phase == ParkPhase.ADVANCE_TO_START:
        if s.move_target is not None:
            # the search has only driven forward, so odometer == drive-line position
            if not stopped:
                return s, STOP
            s = s.model_copy(
                update={
                    "move_start": odometer,
                    "move_distance": s.move_target - odometer,
                    "move_target": None,
                }
            )
        remaining = abs(s.move_distance) - (odometer - s.move_start)
        if remaining > 0.0:
            forward = s.move_distance >= 0.0
            nominal = cfg.approach_speed if forward else cfg.reverse_speed
            speed = _approach_speed(remaining, nominal, cfg)
            if forward:
                return s, ControlCommand(steering=lane_cmd.steering, speed=speed)
            return s, ControlCommand(steering=0.0, speed=-speed)
        if not stopped:
            return s, STOP
        s = go(
            ParkPhase.TRAJECTORY,
            "reached Tr-1",
            step=TrajectoryStep.STEER_RIGHT,
            settle_ticks=0,
            tr_marks=[odometer],
        )
        return _trajectory(s, odometer, False, traj, cfg, transitions, events)

    return _trajectory(s, odometer, stopped, traj, cfg, transitions, events)


def _terminate(
    s: ParkState,
    traj: ParkingTrajectory,
    cfg: GapSearchConfig,
    reason: str,
    go: GoFn,
    events: List[EventKind],
) -> Tuple[ParkState, ControlCommand]:
    chosen = None
    if cfg.strategy == SearchStrategy.BEST_FIT:
        chosen = best_fit_select(s.found_gaps, cfg.min_gap)
    if chosen is None:
        events.append(EventKind.PARK_FAILED)
        return go(ParkPhase.FAILED, reason, measuring=False), STOP
    target = chosen.end + traj.advance_for(chosen.width, cfg.short_advance)
    s = go(
        ParkPhase.ADVANCE_TO_START,
        f"{reason}; best gap {chosen.width:.3f}",
        chosen=chosen,
        measuring=False,
        move_target=target,
    )
    return s, STOP


def _run(
    s: ParkState,
    d_u: SensorReading,
    odometer: float,
    lane_cmd: ControlCommand,
    cfg: GapSearchConfig,
    kappa: Optional[float],
    transitions: List[Transition],
    events: List[EventKind],
) -> Tuple[ParkState, ControlCommand]:
    unchanged = s.last_odometer is not None and odometer == s.last_odometer
    still = s.still_ticks + 1 if unchanged else 0
    stopped = still >= max(1, math.ceil(cfg.stop_time / cfg.period - 1e-9))
    s = s.model_copy(update={"last_odometer": odometer, "still_ticks": still})
    return _step(s, d_u, odometer, stopped, lane_cmd, cfg, kappa, transitions, events)


def _trajectory(
    s: ParkState,
    odometer: float,
    stopped: bool,
    traj: ParkingTrajectory,
    cfg: GapSearchConfig,
    transitions: List[Transition],
    events: List[EventKind],
) -> Tuple[ParkState, ControlCommand]:
    settle = int(math.ceil(cfg.steer_settle_time / cfg.period - 1e-9))
    right = -cfg.max_steer_right
    left = cfg.max_steer_left

    if s.step in (TrajectoryStep.STEER_RIGHT, TrajectoryStep.STEER_LEFT):
        steering = right if s.step == TrajectoryStep.STEER_RIGHT else left
        if s.settle_ticks < settle:
            return (
                s.model_copy(update={"settle_ticks": s.settle_ticks + 1}),
                ControlCommand(steering=steering, speed=0.0),
            )
        nxt = (
            TrajectoryStep.REVERSE_RIGHT
            if s.step == TrajectoryStep.STEER_RIGHT
            else TrajectoryStep.REVERSE_LEFT
        )
        s = s.model_copy(update={"step": nxt, "tr_marks": list(s.tr_marks) + [odometer]})
        logger.debug(f"Parking trajectory step {nxt.value} at odometer {odometer:.3f}")
        return _trajectory(s, odometer, False, traj, cfg, transitions, events)

    if s.step == TrajectoryStep.REVERSE_RIGHT:
        length, steering = traj.arc_right, right
    else:
        length, steering = traj.arc_left, left
    remaining = length - (odometer - s.tr_marks[-1])
    if remaining > 0.0:
        speed = _approach_speed(remaining, cfg.reverse_speed, cfg)
        return s, ControlCommand(steering=steering, speed=-speed)
    if not stopped:
        return s, ControlCommand(steering=steering, speed=0.0)

    if s.step == TrajectoryStep.REVERSE_RIGHT:
        s = s.model_copy(
            update={
                "step": TrajectoryStep.STEER_LEFT,
                "settle_ticks": 0,
                "tr_marks": list(s.tr_marks) + [odometer],
            }
        )
        logger.debug(f"Parking trajectory reached Tr-2 at odometer {odometer:.3f}")
        return _trajectory(s, odometer, False, traj, cfg, transitions, events)

    transitions.append((s.phase, ParkPhase.DONE, "reached Tr-3"))
    events.append(EventKind.PARKED)
    return (
        s.model_copy(
            update={
                "phase": ParkPhase.DONE,
                "step": None,
                "tr_marks": list(s.tr_marks) + [odometer],
            }
        ),
        ControlCommand(steering=steering, speed=0.0),
    )


def park_tick(
    s: ParkState,
    d_u: SensorReading,
    odometer: float,
    lane_cmd: ControlCommand,
    cfg: GapSearchConfig,
    kappa: Optional[float] = None,
) -> Tuple[ParkState, ControlCommand]:
    """One 40 Hz tick of the parking machine.

    Args:
        s: Current machine state.
        d_u: Latest front-right ultrasonic reading (may repeat between samples).
        odometer: Odometer readout in meters.
        lane_cmd: Lane-following command, passed through while searching.
        cfg: Gap search settings including the planned trajectory.
        kappa: Curvature of a newly processed camera frame, or None when no new
            frame arrived since the last tick.

    Returns:
        The new state and the command to apply.
    """
    return _run(s, d_u, odometer, lane_cmd, cfg, kappa, [], [])


class ParkMachine:
    """Parking machine owning its state, the transition log and tick events."""

    def __init__(self, cfg: GapSearchConfig):
        if cfg.trajectory is None:
            raise ValueError("gap search config needs a parking trajectory")
        self.cfg = cfg
        self.state = ParkState()
        self.transitions: List[PhaseTransition] = []
        self.events: List[EventKind] = []
        self.logger = logger

    @property
    def passthrough(self) -> bool:
        return self.state.passthrough

    @property
    def measured_gap(self) -> Optional[GapCandidate]:
        """Gap between the two latest odometer marks, if both are set."""
        s = self.state
        if s.odo_mark_1 is None or s.odo_mark_2 is None:
            return None
        return GapCandidate(start=s.odo_mark_1, end=s.odo_mark_2)

    @property
    def executing_trajectory(self) -> bool:
        return self.state.phase == ParkPhase.TRAJECTORY

    def tick(
        self,
        t: float,
        d_u: SensorReading,
        odometer: float,
        lane_cmd: ControlCommand,
        kappa: Optional[float] = None,
    ) -> ControlCommand:
        changes: List[Transition] = []
        self.events = []
        self.state, cmd = _run(
            self.state, d_u, odometer, lane_cmd, self.cfg, kappa, changes, self.events
        )
        for src, dst, trigger in changes:
            self.logger.debug(f"t={t:.3f} {MACHINE_NAME}: {src.value} -> {dst.value} ({trigger})")
            self.transitions.append(
                PhaseTransition(
                    t=t,
                    machine=MACHINE_NAME,
                    from_phase=src.value,
                    to_phase=dst.value,
                    trigger=trigger,
                )
            )
        if self.state.terminal and changes:
            self.logger.info(f"Parking finished: {self.state.phase.value} at t={t:.3f}")
        return cmd
