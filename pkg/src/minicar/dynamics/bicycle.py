"""Kinematic bicycle model with first-order actuator slew limits."""

import logging
import math

from ..core.models import ControlCommand, VehicleParams, VehicleState

logger = logging.getLogger(__name__)


def _clamp(value: float, low: float, high: float) -> float:
    return max(low, min(high, value))


def _slew(current: float, target: float, max_delta: float) -> float:
    return current + _clamp(target - current, -max_delta, max_delta)


def step(
    state: VehicleState, cmd: ControlCommand, params: VehicleParams, dt: float
) -> VehicleState:
    """Advance the vehicle by one explicit Euler step.

    The pose is integrated with the current speed and steering angle; both then
    move toward the (clamped) command targets, limited by the servo and motor
    slew rates.

    Args:
        state: Current vehicle state (reference point: rear axle center).
        cmd: Steering and speed targets.
        params: Vehicle geometry and limits.
        dt: Time step in seconds.

    Returns:
        The next vehicle state.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0 (got {dt})")

    v, delta, psi = state.speed, state.steering, state.heading
    yaw_rate = v / params.wheelbase * math.tan(delta)

    steer_target = _clamp(cmd.steering, -params.max_steer_right, params.max_steer_left)
    speed_target = _clamp(cmd.speed, -params.v_max, params.v_max)

    return VehicleState(
        x=state.x + v * math.cos(psi) * dt,
        y=state.y + v * math.sin(psi) * dt,
        heading=psi + yaw_rate * dt,
        speed=_slew(v, speed_target, params.accel * dt),
        steering=_slew(delta, steer_target, params.steer_rate * dt),
        odometer=state.odometer + abs(v) * dt,
        yaw_rate=yaw_rate,
    )


def turning_radius(params: VehicleParams, delta: float) -> float:
    """Radius of the rear axle path for steering angle ``delta``; ``inf`` when straight."""
    if delta == 0.0:
        return math.inf
    return params.wheelbase / abs(math.tan(delta))
