"""Single-layer ray casting for the virtual distance sensors."""

import logging
import math
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..core.models import (
    SENTINEL,
    DistanceSensorConfig,
    GapCandidate,
    LaneId,
    ObstacleBox,
    RayHitSet,
    SensorReading,
    TrackModel,
    VehicleState,
)
from ..track.geometry import skeleton_pose

logger = logging.getLogger(__name__)

World = Union[TrackModel, Sequence[ObstacleBox]]


def box_edges(boxes: Sequence[ObstacleBox]) -> np.ndarray:
    """Edges of all boxes as an (E, 4) array of ``x0, y0, x1, y1``."""
    if not boxes:
        return np.zeros((0, 4))
    rows = []
    for box in boxes:
        c = box.corners()
        rows.append(np.hstack([c, np.roll(c, -1, axis=0)]))
    return np.vstack(rows)


def mount_pose(cfg: DistanceSensorConfig, vehicle: VehicleState) -> Tuple[float, float, float]:
    """World-frame position and boresight of a sensor."""
    c, s = math.cos(vehicle.heading), math.sin(vehicle.heading)
    return (
        vehicle.x + cfg.mount_x * c - cfg.mount_y * s,
        vehicle.y + cfg.mount_x * s + cfg.mount_y * c,
        vehicle.heading + cfg.mount_theta,
    )


def ray_angles(cfg: DistanceSensorConfig, boresight: float) -> np.ndarray:
    if cfg.ray_count == 1:
        return np.array([boresight])
    half = cfg.opening_angle / 2.0
    return np.linspace(boresight - half, boresight + half, cfg.ray_count)


class RayCaster:
    """Casts sensor rays against a fixed set of obstacle boxes."""

    def __init__(self, world: World):
        boxes = world.world_boxes if isinstance(world, TrackModel) else list(world)
        self.edges = box_edges(boxes)
        self.logger = logger

    def cast(self, cfg: DistanceSensorConfig, vehicle: VehicleState) -> RayHitSet:
        """Intersect every ray of ``cfg`` with the world; keep the nearest hit per ray."""
        ox, oy, boresight = mount_pose(cfg, vehicle)
        angles = ray_angles(cfg, boresight)
        if self.edges.shape[0] == 0:
            return RayHitSet(points=[None] * len(angles), distances=[None] * len(angles))

        dx, dy = np.cos(angles)[:, None], np.sin(angles)[:, None]
        px, py = self.edges[:, 0], self.edges[:, 1]
        sx, sy = self.edges[:, 2] - px, self.edges[:, 3] - py
        wx, wy = px - ox, py - oy

        denom = dx * sy - dy * sx
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (wx * sy - wy * sx) / denom
            u = (wx * dy - wy * dx) / denom
        hit = (np.abs(denom) > 1e-12) & (t > 1e-12) & (u >= 0.0) & (u <= 1.0)
        hit &= t <= cfg.max_range
        t = np.where(hit, t, np.inf)
        nearest = t.min(axis=1)

        points: List = []
        distances: List = []
        for angle, d in zip(angles, nearest):
            if math.isfinite(d):
                points.append((ox + d * math.cos(angle), oy + d * math.sin(angle)))
                distances.append(float(d))
            else:
                points.append(None)
                distances.append(None)
        return RayHitSet(points=points, distances=distances)

    def distance(
        self, cfg: DistanceSensorConfig, vehicle: VehicleState, timestamp: float = 0.0
    ) -> SensorReading:
        nearest = self.cast(cfg, vehicle).nearest
        return SensorReading(
            sensor_id=cfg.id,
            timestamp=timestamp,
            d=nearest if nearest is not None else SENTINEL,
        )


def cast_rays(cfg: DistanceSensorConfig, vehicle: VehicleState, world: World) -> RayHitSet:
    """Per-ray intersection points of one sensor."""
    return RayCaster(world).cast(cfg, vehicle)


def ray_distance(
    cfg: DistanceSensorConfig,
    vehicle: VehicleState,
    world: World,
    timestamp: float = 0.0,
) -> SensorReading:
    """Nearest obstacle distance seen by a sensor, or the ``-1`` sentinel."""
    return RayCaster(world).distance(cfg, vehicle, timestamp)


def sweep_drive_line(
    track: TrackModel,
    sensor: DistanceSensorConfig,
    lane: LaneId,
    s_from: float,
    s_to: float,
    step: float,
) -> List[GapCandidate]:
    """Gaps visible to ``sensor`` while its vehicle follows a lane skeleton exactly.

    The vehicle reference point is moved from ``s_from`` to ``s_to`` in ``step``
    increments. A gap starts at the first no-echo sample after an echo and ends at
    the first echo after it; the candidate bounds are the arc lengths of those
    two samples.
    """
    if not step > 0.0 or s_to <= s_from:
        raise ValueError("sweep needs step > 0 and s_to > s_from")
    caster = RayCaster(track)
    gaps: List[GapCandidate] = []
    last_echo = False
    gap_start = None
    for s in np.arange(s_from, s_to + step / 2.0, step):
        s = min(float(s), s_to)
        pose = skeleton_pose(track, lane, s)
        state = VehicleState(x=pose.x, y=pose.y, heading=pose.heading)
        echo = caster.distance(sensor, state).has_echo
        if last_echo and not echo:
            gap_start = s
        elif echo and not last_echo and gap_start is not None:
            gaps.append(GapCandidate(start=gap_start, end=s))
            gap_start = None
        last_echo = echo
    return gaps
