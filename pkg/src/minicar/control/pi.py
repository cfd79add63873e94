"""PI lane-keeping law and the speed policy."""

import logging
from typing import Optional, Tuple

from ..core.models import ControllerConfig, LateralError, PiState

logger = logging.getLogger(__name__)


def _clamp(value: float, low: float, high: float) -> float:
    return max(low, min(high, value))


def pi_step(
    s: PiState, e: LateralError, dt: float, cfg: ControllerConfig
) -> Tuple[float, PiState]:
    """One step of ``y = Kp·e + Ki·∫e``, integrated with the rectangle rule.

    While perception is invalid the last valid error stands in for ``e``: it is
    held unchanged for ``cfg.hold_time`` seconds and then shrinks by
    ``cfg.decay`` per step. Without any valid error yet, ``e`` is taken as 0.

    Returns:
        The steering angle in radians (positive turns left) and the new state.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0 (got {dt})")

    if e.valid:
        value, held, age = e.e, e.e, 0.0
    elif s.held_e is None:
        value, held, age = 0.0, None, s.age + dt
    else:
        age = s.age + dt
        held = s.held_e if age <= cfg.hold_time else s.held_e * cfg.decay
        value = held

    integral = _clamp(s.integral + value * dt, -cfg.i_max, cfg.i_max)
    y = cfg.kp * value + cfg.ki * integral
    steering = _clamp(cfg.steer_scale * y, -cfg.max_steer_right, cfg.max_steer_left)
    return steering, PiState(integral=integral, held_e=held, age=age, output=y)


def speed_policy(
    kappa: Optional[float], override: Optional[float], cfg: ControllerConfig
) -> float:
    """Speed target in m/s: the behavior override if any, else curvature-scaled cruise."""
    if override is not None:
        return override
    if kappa is None:
        return cfg.cruise_speed
    scaled = cfg.cruise_speed * max(0.0, 1.0 - cfg.curve_gain * abs(kappa))
    return max(min(cfg.min_speed, cfg.cruise_speed), scaled)
