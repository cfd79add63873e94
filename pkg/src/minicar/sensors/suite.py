"""Default distance sensor layout of the car."""

import math
from typing import Dict

from ..core.models import DistanceSensorConfig

US_FRONT = "us_front"
US_FRONT_RIGHT = "us_front_right"
IR_SIDE_FRONT_RIGHT = "ir_side_front_right"
IR_SIDE_REAR_RIGHT = "ir_side_rear_right"
IR_REAR_LEFT = "ir_rear_left"
IR_REAR_RIGHT = "ir_rear_right"

ULTRASONIC_PERIOD = 0.07
INFRARED_PERIOD = 0.025


def _ultrasonic(id: str, x: float, y: float, theta: float, scale: float) -> DistanceSensorConfig:
    return DistanceSensorConfig(
        id=id,
        mount_x=x * scale,
        mount_y=y * scale,
        mount_theta=theta,
        opening_angle=math.radians(30.0),
        max_range=3.0 * scale,
        ray_count=11,
        period=ULTRASONIC_PERIOD,
    )


def _infrared(id: str, x: float, y: float, theta: float, scale: float) -> DistanceSensorConfig:
    return DistanceSensorConfig(
        id=id,
        mount_x=x * scale,
        mount_y=y * scale,
        mount_theta=theta,
        opening_angle=math.radians(4.0),
        max_range=0.8 * scale,
        ray_count=3,
        period=INFRARED_PERIOD,
    )


def default_sensor_suite(scale: float = 1.0) -> Dict[str, DistanceSensorConfig]:
    """Sensors keyed by id; mounts are relative to the rear axle center.

    Two ultrasonic sensors look forward and to the right from the front of the
    body, two infrared sensors look right along the side, and two look backward
    from the rear corners.
    """
    right = -math.pi / 2.0
    suite = [
        _ultrasonic(US_FRONT, 0.33, 0.0, 0.0, scale),
        _ultrasonic(US_FRONT_RIGHT, 0.30, -0.09, right, scale),
        _infrared(IR_SIDE_FRONT_RIGHT, 0.22, -0.09, right, scale),
        _infrared(IR_SIDE_REAR_RIGHT, -0.02, -0.09, right, scale),
        _infrared(IR_REAR_LEFT, -0.07, 0.06, math.pi, scale),
        _infrared(IR_REAR_RIGHT, -0.07, -0.06, math.pi, scale),
    ]
    return {cfg.id: cfg for cfg in suite}
