"""Collision and off-track detection for the closed loop."""

import logging
from typing import Iterable, Optional

import numpy as np

from ..core.models import EventKind, ObstacleBox

logger = logging.getLogger(__name__)

OFF_TRACK_PERSISTENCE = 0.2


def _axes(box: ObstacleBox) -> np.ndarray:
    corners = box.corners()
    edges = np.roll(corners, -1, axis=0) - corners
    normals = np.column_stack([-edges[:2, 1], edges[:2, 0]])
    return normals / np.linalg.norm(normals, axis=1)[:, None]


def boxes_overlap(a: ObstacleBox, b: ObstacleBox) -> bool:
    """Separating-axis test for two oriented rectangles; touching edges do not overlap."""
    ca, cb = a.corners(), b.corners()
    for axis in np.vstack([_axes(a), _axes(b)]):
        pa, pb = ca @ axis, cb @ axis
        if pa.max() <= pb.min() or pb.max() <= pa.min():
            return False
    return True


def check_collision(
    footprint: ObstacleBox, obstacles: Iterable[ObstacleBox]
) -> Optional[EventKind]:
    """COLLISION if the vehicle footprint overlaps any obstacle."""
    for box in obstacles:
        if boxes_overlap(footprint, box):
            return EventKind.COLLISION
    return None


def check_off_track(deviation: Optional[float], limit: float) -> Optional[EventKind]:
    """OFF_TRACK if the deviation is unknown or exceeds ``limit``."""
    if deviation is None or abs(deviation) > limit:
        return EventKind.OFF_TRACK
    return None


class OffTrackMonitor:
    """Reports an excursion once it has lasted ``persistence`` seconds.

    Each excursion is reported a single time; the monitor re-arms after the
    vehicle is back within the limit.
    """

    def __init__(self, limit: float, dt: float, persistence: float = OFF_TRACK_PERSISTENCE):
        self.limit = limit
        self.required = max(1, int(round(persistence / dt)))
        self.count = 0
        self.reported = False

    def reset(self) -> None:
        self.count = 0
        self.reported = False

    def update(self, deviation: Optional[float]) -> Optional[EventKind]:
        if check_off_track(deviation, self.limit) is None:
            self.reset()
            return None
        self.count += 1
        if self.count >= self.required and not self.reported:
            self.reported = True
            logger.debug(f"Off track: deviation {deviation} beyond {self.limit:.3f} m")
            return EventKind.OFF_TRACK
        return None


class CollisionMonitor:
    """Reports each new contact with an obstacle once."""

    def __init__(self, obstacles: Iterable[ObstacleBox]):
        self.obstacles = list(obstacles)
        self.in_contact = False

    def update(self, footprint: ObstacleBox) -> Optional[EventKind]:
        hit = check_collision(footprint, self.obstacles)
        new_contact = hit is not None and not self.in_contact
        self.in_contact = hit is not None
        if new_contact:
            logger.debug(f"Collision at footprint center {footprint.center}")
            return EventKind.COLLISION
        return None
