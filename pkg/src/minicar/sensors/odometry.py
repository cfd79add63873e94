"""Wheel-encoder and IMU readouts of the dynamics ground truth."""

import logging
import math
from typing import Optional

import numpy as np

from ..core.models import VehicleState, normalize_angle

logger = logging.getLogger(__name__)

TICK_EPSILON = 1e-9


def read_odometer(vehicle: VehicleState, tick: float = 0.0) -> float:
    """Odometer in meters, floor-quantized to ``tick`` when it is positive."""
    if tick <= 0.0:
        return vehicle.odometer
    return math.floor(vehicle.odometer / tick + TICK_EPSILON) * tick


def read_heading(
    vehicle: VehicleState,
    sigma: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Heading in radians, with optional gaussian IMU noise."""
    if sigma <= 0.0 or rng is None:
        return vehicle.heading
    return normalize_angle(vehicle.heading + float(rng.normal(0.0, sigma)))
