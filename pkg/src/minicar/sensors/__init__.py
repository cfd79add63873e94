"""Virtual sensors: ray-cast distance sensors, camera, odometry and noise."""

from .camera import CameraRenderer, marking_quads, render_camera, write_pgm
from .noise import NoiseChannel, apply_noise, substream
from .odometry import read_heading, read_odometer
from .rays import RayCaster, cast_rays, mount_pose, ray_distance, sweep_drive_line
from .suite import (
    IR_REAR_LEFT,
    IR_REAR_RIGHT,
    IR_SIDE_FRONT_RIGHT,
    IR_SIDE_REAR_RIGHT,
    US_FRONT,
    US_FRONT_RIGHT,
    default_sensor_suite,
)

__all__ = [
    "CameraRenderer",
    "marking_quads",
    "render_camera",
    "write_pgm",
    "NoiseChannel",
    "apply_noise",
    "substream",
    "read_heading",
    "read_odometer",
    "RayCaster",
    "cast_rays",
    "mount_pose",
    "ray_distance",
    "sweep_drive_line",
    "IR_REAR_LEFT",
    "IR_REAR_RIGHT",
    "IR_SIDE_FRONT_RIGHT",
    "IR_SIDE_REAR_RIGHT",
    "US_FRONT",
    "US_FRONT_RIGHT",
    "default_sensor_suite",
]
