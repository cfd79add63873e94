"""Synthetic monocular camera rendering the lane markings as a binary image."""

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Union

import cv2
import numpy as np

from ..core.exceptions import ExportError
from ..core.models import (
    CameraConfig,
    CameraImage,
    MarkingPolyline,
    TrackModel,
    VehicleState,
)
from ..track.geometry import lane_marking_segments

logger = logging.getLogger(__name__)

MIN_DEPTH = 0.05
SUBPIXEL_BITS = 4


def marking_quads(
    markings: Sequence[MarkingPolyline], marking_width: float
) -> np.ndarray:
    """Thicken marking polylines into ground quads, shape (Q, 4, 2)."""
    quads: List[np.ndarray] = []
    half = marking_width / 2.0
    for line in markings:
        pts = line.points
        if len(pts) < 2:
            continue
        a, b = pts[:-1], pts[1:]
        d = b - a
        norm = np.hypot(d[:, 0], d[:, 1])
        keep = norm > 1e-12
        a, b, d, norm = a[keep], b[keep], d[keep], norm[keep]
        n = np.column_stack([-d[:, 1], d[:, 0]]) / norm[:, None] * half
        quads.append(np.stack([a + n, b + n, b - n, a - n], axis=1))
    if not quads:
        return np.zeros((0, 4, 2))
    return np.concatenate(quads)


class CameraRenderer:
    """Projects the track's marking quads through a pinhole camera.

    The quads are built once per track; each frame only transforms and fills
    the quads inside the render range.
    """

    def __init__(
        self,
        cfg: CameraConfig,
        track: TrackModel,
        markings: Optional[Sequence[MarkingPolyline]] = None,
    ):
        self.cfg = cfg
        self.logger = logger
        if markings is None:
            markings = lane_marking_segments(track)
        self.quads = marking_quads(markings, cfg.marking_width)
        self.centroids = self.quads.mean(axis=1) if len(self.quads) else np.zeros((0, 2))

    def camera_position(self, vehicle: VehicleState) -> np.ndarray:
        c, s = math.cos(vehicle.heading), math.sin(vehicle.heading)
        cfg = self.cfg
        return np.array(
            [
                vehicle.x + cfg.mount_x * c - cfg.mount_y * s,
                vehicle.y + cfg.mount_x * s + cfg.mount_y * c,
                cfg.mount_z,
            ]
        )

    def project(self, vehicle: VehicleState, points: np.ndarray) -> np.ndarray:
        """Project ground points (..., 2) to (u, v, depth) pixel coordinates."""
        cfg = self.cfg
        cam = self.camera_position(vehicle)
        c, s = math.cos(vehicle.heading), math.sin(vehicle.heading)
        cp, sp = math.cos(cfg.pitch), math.sin(cfg.pitch)
        forward = np.array([cp * c, cp * s, sp])
        right = np.array([s, -c, 0.0])
        down = np.array([sp * c, sp * s, -cp])

        rel = np.concatenate(
            [points - cam[:2], np.full(points.shape[:-1] + (1,), -cam[2])], axis=-1
        )
        depth = rel @ forward
        with np.errstate(divide="ignore", invalid="ignore"):
            u = cfg.cx + cfg.fx * (rel @ right) / depth
            v = cfg.cy + cfg.fy * (rel @ down) / depth
        return np.stack([u, v, depth], axis=-1)

    def render(self, vehicle: VehicleState, timestamp: float = 0.0) -> CameraImage:
        cfg = self.cfg
        data = np.zeros((cfg.image_height, cfg.image_width), dtype=np.uint8)
        if len(self.quads):
            cam = self.camera_position(vehicle)
            near = np.hypot(
                self.centroids[:, 0] - cam[0], self.centroids[:, 1] - cam[1]
            ) <= cfg.render_range
            projected = self.project(vehicle, self.quads[near])
            visible = (projected[..., 2] >= MIN_DEPTH).all(axis=1)
            fixed = np.round(projected[visible, :, :2] * (1 << SUBPIXEL_BITS)).astype(np.int32)
            for quad in fixed:
                cv2.fillConvexPoly(data, quad, 1, lineType=cv2.LINE_8, shift=SUBPIXEL_BITS)
        return CameraImage(
            width=cfg.image_width, height=cfg.image_height, data=data, timestamp=timestamp
        )


def render_camera(cfg: CameraConfig, vehicle: VehicleState, track: TrackModel) -> CameraImage:
    """Render one binary marking frame for a vehicle on a track."""
    return CameraRenderer(cfg, track).render(vehicle)


def write_pgm(image: CameraImage, path: Union[str, Path]) -> Path:
    """Write a frame as a binary (P5) PGM file; marking pixels become white."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        ok = cv2.imwrite(str(path), image.data * 255, [cv2.IMWRITE_PXM_BINARY, 1])
    except (OSError, cv2.error) as e:
        raise ExportError(str(path), str(e)) from e
    if not ok:
        raise ExportError(str(path), "image encoder refused the file")
    return path
