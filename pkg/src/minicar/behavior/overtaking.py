"""Lane following with overtaking of a stationary or slower obstacle.

The machine runs at the behavior rate (10 Hz by default) on the latest readings
of the front, front-right and the two right-side infrared sensors. Phases that
only watch the sensors pass the lane-following command through unchanged, except
that the obstacle is passed at maneuver speed; the turning phases override it
with full steering lock at maneuver speed. The
return phases replay the turning tick counters in reverse.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..core.models import (
    SENTINEL,
    ControlCommand,
    OvertakeConfig,
    OvertakePhase,
    OvertakeState,
    PhaseTransition,
    PlausibilityVerdict,
    SensorReading,
)

logger = logging.getLogger(__name__)

MACHINE_NAME = "overtake"

Transition = Tuple[OvertakePhase, OvertakePhase, str]


def plausibility_check(
    window: Sequence[float], dt: float, cfg: OvertakeConfig
) -> PlausibilityVerdict:
    """Decide whether a front obstacle is stationary or slower in our direction.

    The closing speed comes from a least-squares line through the valid samples
    (sentinels keep their time slot but are left out of the fit). A rising
    distance rejects the object; a non-rising one is accepted once the window is
    full, holds at least ``min_echoes`` valid samples and the latest distance is
    below the engage threshold.
    """
    if not window:
        raise ValueError("plausibility window must not be empty")
    t = np.arange(len(window), dtype=float) * dt
    d = np.asarray(window, dtype=float)
    valid = d > 0.0
    if valid.sum() < 2:
        return PlausibilityVerdict.PENDING

    slope = float(stats.linregress(t[valid], d[valid]).slope)
    if slope > cfg.tolerance:
        return PlausibilityVerdict.REJECT
    latest = float(d[valid][-1])
    full = len(window) >= cfg.window and valid.sum() >= cfg.min_echoes
    if full and latest < cfg.engage_threshold:
        return PlausibilityVerdict.ACCEPT
    return PlausibilityVerdict.PENDING


def _left(cfg: OvertakeConfig) -> ControlCommand:
    return ControlCommand(steering=cfg.max_steer_left, speed=cfg.maneuver_speed)


def _right(cfg: OvertakeConfig) -> ControlCommand:
    return ControlCommand(steering=-cfg.max_steer_right, speed=cfg.maneuver_speed)


def passing_command(lane_cmd: ControlCommand, cfg: OvertakeConfig) -> ControlCommand:
    """Lane-following steering with the speed held to maneuver speed."""
    if lane_cmd.speed <= cfg.maneuver_speed:
        return lane_cmd
    return lane_cmd.model_copy(update={"speed": cfg.maneuver_speed})


def _advance(
    s: OvertakeState,
    us_front: SensorReading,
    us_front_right: SensorReading,
    ir_side_front: SensorReading,
    ir_side_rear: SensorReading,
    lane_cmd: ControlCommand,
    cfg: OvertakeConfig,
    transitions: List[Transition],
) -> Tuple[OvertakeState, ControlCommand]:
    def go(phase: OvertakePhase, trigger: str, **changes: object) -> OvertakeState:
        transitions.append((s.phase, phase, trigger))
        return s.model_copy(update={"phase": phase, **changes})

    phase = s.phase

    if phase == OvertakePhase.MOVE_FORWARD:
        if us_front.has_echo and us_front.d < cfg.engage_threshold:
            s = go(OvertakePhase.CHECK_OBJECT_PLAUSIBLE, f"us_front={us_front.d:.3f}", window=[])
            return _advance(
                s, us_front, us_front_right, ir_side_front, ir_side_rear, lane_cmd, cfg,
                transitions,
            )
        return s, lane_cmd

    if phase == OvertakePhase.CHECK_OBJECT_PLAUSIBLE:
        window = (list(s.window) + [us_front.d])[-cfg.window :]
        s = s.model_copy(update={"window": window})
        if len(window) == cfg.window and all(d == SENTINEL for d in window):
            return go(OvertakePhase.MOVE_FORWARD, "object lost", window=[]), lane_cmd
        verdict = plausibility_check(window, cfg.period, cfg)
        if verdict == PlausibilityVerdict.REJECT:
            return go(OvertakePhase.MOVE_FORWARD, "object not plausible", window=[]), lane_cmd
        if verdict == PlausibilityVerdict.ACCEPT:
            s = go(OvertakePhase.TO_LEFT_LANE_LEFT_TURN, f"us_front={us_front.d:.3f}")
            return _advance(
                s, us_front, us_front_right, ir_side_front, ir_side_rear, lane_cmd, cfg, transitions
            )
        return s, lane_cmd

    if phase == OvertakePhase.TO_LEFT_LANE_LEFT_TURN:
        if ir_side_front.has_echo and ir_side_rear.has_echo:
            s = go(
                OvertakePhase.ALIGN_RIGHT_TURN,
                f"ir_front={ir_side_front.d:.3f} ir_rear={ir_side_rear.d:.3f}",
            )
            return _advance(
                s, us_front, us_front_right, ir_side_front, ir_side_rear, lane_cmd, cfg, transitions
            )
        return s.model_copy(update={"counter_left": s.counter_left + 1}), _left(cfg)

    if phase == OvertakePhase.ALIGN_RIGHT_TURN:
        # The equality test only counts once the front sensor has read farther
        # than the rear one, i.e. while the car still points away from the
        # obstacle. The turn ends at the latest when the heading is back.
        if ir_side_front.has_echo and ir_side_rear.has_echo:
            diff = ir_side_front.d - ir_side_rear.d
            if s.ir_armed:
                last = s.last_ir_diff
                crossed = last is not None and (diff > 0.0) != (last > 0.0)
                if abs(diff) <= cfg.alignment_threshold or crossed:
                    s = go(
                        OvertakePhase.PASS_OBSTACLE,
                        f"ir_diff={diff:.4f}",
                        ir_armed=False,
                        last_ir_diff=None,
                    )
                    return s, passing_command(lane_cmd, cfg)
                s = s.model_copy(update={"last_ir_diff": diff})
            elif diff > cfg.alignment_threshold:
                s = s.model_copy(update={"ir_armed": True, "last_ir_diff": diff})
        if s.counter_right >= s.counter_left + cfg.reversal_ticks:
            s = go(
                OvertakePhase.PASS_OBSTACLE,
                f"counter_right={s.counter_right}",
                ir_armed=False,
                last_ir_diff=None,
            )
            return s, passing_command(lane_cmd, cfg)
        return s.model_copy(update={"counter_right": s.counter_right + 1}), _right(cfg)

    if phase == OvertakePhase.PASS_OBSTACLE:
        if us_front_right.has_echo:
            return s.model_copy(update={"pass_misses": 0}), passing_command(lane_cmd, cfg)
        misses = s.pass_misses + 1
        if misses >= cfg.pass_exit_samples:
            s = go(OvertakePhase.RETURN_RIGHT_TURN, "us_front_right=-1", pass_misses=0)
            return _advance(
                s, us_front, us_front_right, ir_side_front, ir_side_rear, lane_cmd, cfg, transitions
            )
        return s.model_copy(update={"pass_misses": misses}), passing_command(lane_cmd, cfg)

    if phase == OvertakePhase.RETURN_RIGHT_TURN:
        if s.counter_right > 0:
            return s.model_copy(update={"counter_right": s.counter_right - 1}), _right(cfg)
        s = go(OvertakePhase.RETURN_LEFT_TURN, "counter_right=0")
        return _advance(
            s, us_front, us_front_right, ir_side_front, ir_side_rear, lane_cmd, cfg, transitions
        )

    # ReturnLeftTurn
    if s.counter_left > 0:
        return s.model_copy(update={"counter_left": s.counter_left - 1}), _left(cfg)
    transitions.append((s.phase, OvertakePhase.MOVE_FORWARD, "counter_left=0"))
    s = OvertakeState()
    return _advance(
        s, us_front, us_front_right, ir_side_front, ir_side_rear, lane_cmd, cfg, transitions
    )


def overtake_tick(
    s: OvertakeState,
    us_front: SensorReading,
    us_front_right: SensorReading,
    ir_side_front: SensorReading,
    ir_side_rear: SensorReading,
    lane_cmd: ControlCommand,
    cfg: Optional[OvertakeConfig] = None,
) -> Tuple[OvertakeState, ControlCommand]:
    """One behavior tick of the overtaking machine.

    A transition taken during a tick is followed by evaluating the new phase on
    the same readings, so the returned command always belongs to the returned
    phase.
    """
    transitions: List[Transition] = []
    return _advance(
        s,
        us_front,
        us_front_right,
        ir_side_front,
        ir_side_rear,
        lane_cmd,
        cfg or OvertakeConfig(),
        transitions,
    )


class OvertakeMachine:
    """Overtaking machine owning its state and the transition log."""

    def __init__(self, cfg: Optional[OvertakeConfig] = None):
        self.cfg = cfg or OvertakeConfig()
        self.state = OvertakeState()
        self.transitions: List[PhaseTransition] = []
        self.logger = logger

    @property
    def passthrough(self) -> bool:
        return self.state.passthrough

    def lane_command(self, lane_cmd: ControlCommand) -> ControlCommand:
        """Shape the per-tick lane command while lane following is active."""
        if self.state.phase == OvertakePhase.PASS_OBSTACLE:
            return passing_command(lane_cmd, self.cfg)
        return lane_cmd

    def tick(
        self,
        t: float,
        us_front: SensorReading,
        us_front_right: SensorReading,
        ir_side_front: SensorReading,
        ir_side_rear: SensorReading,
        lane_cmd: ControlCommand,
    ) -> ControlCommand:
        changes: List[Transition] = []
        self.state, cmd = _advance(
            self.state,
            us_front,
            us_front_right,
            ir_side_front,
            ir_side_rear,
            lane_cmd,
            self.cfg,
            changes,
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
        return cmd
