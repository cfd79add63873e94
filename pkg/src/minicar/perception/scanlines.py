"""Scan-line lane detection and lateral error estimation."""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.exceptions import ExportError
from ..core.models import (
    ArcFit,
    CameraConfig,
    CameraImage,
    LateralError,
    PerceptionMode,
    Pose,
    ScanLineResult,
    Segment,
    SegmentKind,
    TrackModel,
    VehicleState,
)
from ..sensors.camera import CameraRenderer
from .arcfit import evaluate_offset, fit_arc

logger = logging.getLogger(__name__)

ROI_FRACTION = 0.4
DEFAULT_ROW_COUNT = 8
DEFAULT_MIN_ROWS = 2
DEFAULT_PLAUSIBLE_RATIO = 1.6


def default_scan_rows(height: int, count: int = DEFAULT_ROW_COUNT) -> List[int]:
    """Rows evenly spread from the bottom row up through the region of interest."""
    top = height - int(math.ceil(ROI_FRACTION * height))
    return [int(r) for r in np.round(np.linspace(height - 1, top, count))]


def scan_rows(img: CameraImage, rows: Sequence[int]) -> List[ScanLineResult]:
    """March outward from the vertical center line to the first marking pixel.

    Distances are measured in pixels from the center line ``(width - 1) / 2`` to
    the center of the first marking pixel on each side.
    """
    center = (img.width - 1) / 2.0
    right_start = int(math.floor(center)) + 1
    left_stop = int(math.ceil(center))
    results = []
    for row in rows:
        if not 0 <= row < img.height:
            raise ValueError(f"row {row} outside image rows [0, {img.height - 1}]")
        line = img.data[row]
        right_hits = np.flatnonzero(line[right_start:])
        left_hits = np.flatnonzero(line[:left_stop])
        results.append(
            ScanLineResult(
                row=row,
                left=float(center - left_hits[-1]) if len(left_hits) else None,
                right=float(right_start + right_hits[0] - center) if len(right_hits) else None,
            )
        )
    return results


def _plausible(distance: float, target: Optional[float], ratio: float) -> bool:
    return target is None or distance <= ratio * target


def center_points(
    scans: Sequence[ScanLineResult],
    targets: Optional[Dict[int, float]] = None,
    plausible_ratio: float = DEFAULT_PLAUSIBLE_RATIO,
) -> List[Tuple[float, float]]:
    """``(row, offset)`` of the lane center per row.

    Positive offsets lie right of the image center.
    """
    points = []
    for scan in scans:
        if scan.left is None or scan.right is None:
            continue
        target = targets.get(scan.row) if targets else None
        if not (
            _plausible(scan.left, target, plausible_ratio)
            and _plausible(scan.right, target, plausible_ratio)
        ):
            continue
        points.append((float(scan.row), (scan.right - scan.left) / 2.0))
    return points


def lateral_error(
    scans: Sequence[ScanLineResult],
    mode: PerceptionMode = PerceptionMode.CALIBRATED,
    targets: Optional[Dict[int, float]] = None,
    min_rows: int = DEFAULT_MIN_ROWS,
    plausible_ratio: float = DEFAULT_PLAUSIBLE_RATIO,
) -> LateralError:
    """Lateral error in pixels; positive when the car sits right of its line.

    Calibrated mode compares the right distance per row with the calibrated
    target, balanced mode equalizes left and right distances and arc mode reads
    the fitted center curve at the lowest contributing row. Distances beyond
    ``plausible_ratio`` times the row target are treated as absent. Fewer than
    ``min_rows`` contributing rows yield an invalid result.
    """
    if not scans:
        raise ValueError("lateral_error needs at least one scan row")

    terms: List[float] = []
    if mode == PerceptionMode.CALIBRATED:
        if not targets:
            raise ValueError("calibrated mode needs right-distance targets")
        for scan in scans:
            target = targets.get(scan.row)
            if target is None or scan.right is None:
                continue
            if _plausible(scan.right, target, plausible_ratio):
                terms.append(target - scan.right)
    elif mode == PerceptionMode.BALANCED:
        terms = [-offset for _, offset in center_points(scans, targets, plausible_ratio)]
    else:
        points = center_points(scans, targets, plausible_ratio)
        if len(points) < min_rows:
            return LateralError(e=0.0, valid=False, rows=len(points))
        fit = fit_arc(points)
        lowest = max(row for row, _ in points)
        return LateralError(
            e=-evaluate_offset(fit, points, lowest), valid=True, rows=len(points)
        )

    if len(terms) < min_rows:
        return LateralError(e=0.0, valid=False, rows=len(terms))
    return LateralError(e=float(np.mean(terms)), valid=True, rows=len(terms))


def calibrate_targets(
    camera: CameraConfig,
    lane_width: float,
    marking_width: Optional[float] = None,
    rows: Optional[Sequence[int]] = None,
) -> Dict[int, float]:
    """Right-distance targets of a car centered on a straight lane.

    Rows where the centered car sees no right marking are left out.
    """
    if marking_width is not None:
        camera = camera.model_copy(update={"marking_width": marking_width})
    rows = list(rows) if rows is not None else default_scan_rows(camera.image_height)
    track = TrackModel(
        segments=[
            Segment(
                kind=SegmentKind.STRAIGHT,
                start=Pose(x=-1.0, y=0.0, heading=0.0),
                length=camera.render_range + 2.0,
            )
        ],
        lane_width=lane_width,
    )
    image = CameraRenderer(camera, track).render(VehicleState())
    targets = {scan.row: scan.right for scan in scan_rows(image, rows) if scan.right is not None}
    logger.debug(f"Calibrated {len(targets)} scan rows for lane width {lane_width:g} m")
    return targets  # type: ignore[return-value]


class PerceptionPipeline:
    """Per-frame scan-line processing with an optional scan dump."""

    def __init__(
        self,
        mode: PerceptionMode,
        rows: Sequence[int],
        targets: Optional[Dict[int, float]] = None,
        min_rows: int = DEFAULT_MIN_ROWS,
        plausible_ratio: float = DEFAULT_PLAUSIBLE_RATIO,
        record_scans: bool = False,
    ):
        self.mode = mode
        self.rows = list(rows)
        self.targets = targets
        self.min_rows = min_rows
        self.plausible_ratio = plausible_ratio
        self.record_scans = record_scans
        self.scan_log: List[Dict[str, Union[int, float, None]]] = []
        self.frame = 0
        self.logger = logger

    def process(self, image: CameraImage) -> Tuple[LateralError, ArcFit]:
        scans = scan_rows(image, self.rows)
        error = lateral_error(
            scans, self.mode, self.targets, self.min_rows, self.plausible_ratio
        )
        arc = fit_arc(center_points(scans, self.targets, self.plausible_ratio))
        if not error.valid:
            self.logger.debug(
                f"Frame {self.frame} at t={image.timestamp:.3f}: "
                f"{error.rows} usable rows, holding last error"
            )
        if self.record_scans:
            self.scan_log.extend(
                {"frame": self.frame, "row": s.row, "left": s.left, "right": s.right}
                for s in scans
            )
        self.frame += 1
        return error, arc


def write_scan_csv(
    scan_log: Sequence[Dict[str, Union[int, float, None]]], path: Union[str, Path]
) -> Path:
    """Write recorded scan results as ``frame,row,left,right`` rows."""
    path = Path(path)
    frame = pd.DataFrame(list(scan_log), columns=["frame", "row", "left", "right"])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as e:
        raise ExportError(str(path), str(e)) from e
    return path
