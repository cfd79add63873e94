"""Geometric queries on a TrackModel: skeleton poses, deviations and markings."""

import logging
import math
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from ..core.exceptions import OffTrackError
from ..core.models import (
    LaneId,
    MarkingPolyline,
    MarkingSide,
    Pose,
    Segment,
    TrackModel,
)

logger = logging.getLogger(__name__)

CHORD_ERROR = 1e-3  # meters at scale 1
MAX_SAMPLE_STEP = 0.05  # meters at scale 1
S_TOLERANCE = 1e-9


class SkeletonProjection(NamedTuple):
    """Nearest skeleton point of a query position."""

    deviation: float  # signed, positive = right of the skeleton
    distance: float
    lane: LaneId
    segment_index: int
    s: float  # arc length along that lane


def lane_offset(track: TrackModel, lane: LaneId) -> float:
    """Lateral offset of a lane skeleton from the right lane skeleton (left positive)."""
    return track.lane_width if lane == LaneId.LEFT else 0.0


def marking_offset(track: TrackModel, side: MarkingSide) -> float:
    w = track.lane_width
    offsets = {MarkingSide.RIGHT: -w / 2.0, MarkingSide.CENTER: w / 2.0, MarkingSide.LEFT: 1.5 * w}
    return offsets[side]


def _offset_length(seg: Segment, offset: float) -> float:
    k = seg.curvature
    if k == 0.0:
        return seg.arc_length
    return abs(seg.sweep * (seg.radius - offset))  # type: ignore[operator]


def lane_length(track: TrackModel, lane: LaneId = LaneId.RIGHT) -> float:
    """Total length of a lane skeleton."""
    off = lane_offset(track, lane)
    return sum(_offset_length(seg, off) for seg in track.segments)


def segment_starts(track: TrackModel, lane: LaneId = LaneId.RIGHT) -> List[float]:
    """Arc length along ``lane`` at which each segment begins."""
    off = lane_offset(track, lane)
    starts, total = [], 0.0
    for seg in track.segments:
        starts.append(total)
        total += _offset_length(seg, off)
    return starts


def skeleton_pose(track: TrackModel, lane: LaneId, s: float) -> Pose:
    """Pose on a lane skeleton at arc length ``s``.

    Raises:
        ValueError: If ``s`` lies outside ``[0, lane length]``.
    """
    total = lane_length(track, lane)
    if s < -S_TOLERANCE or s > total + S_TOLERANCE * max(1.0, total):
        raise ValueError(f"s={s} outside lane range [0, {total}]")
    s = min(max(s, 0.0), total)

    off = lane_offset(track, lane)
    remaining = s
    for seg in track.segments:
        seg_len = _offset_length(seg, off)
        if remaining <= seg_len or seg is track.segments[-1]:
            ratio = seg.arc_length / seg_len if seg_len > 0.0 else 1.0
            return seg.pose_at(min(remaining, seg_len) * ratio, offset=off)
        remaining -= seg_len
    raise AssertionError("unreachable")


def _project_segment(
    seg: Segment, offset: float, px: float, py: float
) -> Tuple[float, float, float]:
    """Return (distance, signed left lateral, local skeleton s) for one segment."""
    h0 = seg.start.heading
    nx, ny = -math.sin(h0), math.cos(h0)
    k = seg.curvature
    if k == 0.0:
        ox, oy = seg.start.x + offset * nx, seg.start.y + offset * ny
        dx, dy = math.cos(h0), math.sin(h0)
        rx, ry = px - ox, py - oy
        t = min(max(rx * dx + ry * dy, 0.0), seg.arc_length)
        qx, qy = ox + t * dx, oy + t * dy
        lateral = dx * (py - qy) - dy * (px - qx)
        return math.hypot(px - qx, py - qy), lateral, t

    r = seg.radius  # type: ignore[assignment]
    sweep = seg.sweep  # type: ignore[assignment]
    cx, cy = seg.start.x + r * nx, seg.start.y + r * ny
    rho = abs(r - offset)
    direction = 1.0 if r > 0.0 else -1.0
    phi0 = math.atan2(seg.start.y + offset * ny - cy, seg.start.x + offset * nx - cx)
    vx, vy = px - cx, py - cy
    dist_c = math.hypot(vx, vy)
    delta = ((math.atan2(vy, vx) - phi0) * direction) % (2.0 * math.pi)
    if delta <= sweep:
        lateral = (rho - dist_c) if r > 0.0 else (dist_c - rho)
        if r > 0.0 and offset > r or r < 0.0 and offset < r:
            lateral = -lateral
        return abs(dist_c - rho), lateral, delta * abs(r)

    best: Optional[Tuple[float, float, float]] = None
    for s_end in (0.0, seg.arc_length):
        pose = seg.pose_at(s_end, offset=offset)
        ex, ey = px - pose.x, py - pose.y
        d = math.hypot(ex, ey)
        lateral = math.cos(pose.heading) * ey - math.sin(pose.heading) * ex
        if best is None or d < best[0]:
            best = (d, lateral, s_end)
    return best  # type: ignore[return-value]


def project_to_skeleton(
    track: TrackModel, x: float, y: float, lane: Optional[LaneId] = None
) -> SkeletonProjection:
    """Nearest skeleton point over one lane, or over both when ``lane`` is None."""
    lanes = [lane] if lane is not None else [LaneId.RIGHT, LaneId.LEFT]
    best: Optional[SkeletonProjection] = None
    for ln in lanes:
        off = lane_offset(track, ln)
        starts = segment_starts(track, ln)
        for i, seg in enumerate(track.segments):
            dist, lateral, s_local = _project_segment(seg, off, x, y)
            if best is None or dist < best.distance - 1e-12:
                ratio = _offset_length(seg, off) / seg.arc_length
                best = SkeletonProjection(
                    deviation=-lateral if abs(lateral) > 0.0 else 0.0,
                    distance=dist,
                    lane=ln,
                    segment_index=i,
                    s=starts[i] + s_local * ratio,
                )
    assert best is not None
    return best


def deviation_from_skeleton(
    track: TrackModel, p: Tuple[float, float], lane: Optional[LaneId] = None
) -> float:
    """Signed distance from ``p`` to the nearest point of the current lane skeleton.

    Positive values lie right of the skeleton. The current lane is the nearest of
    the two lanes unless ``lane`` is given.

    Raises:
        OffTrackError: If ``p`` is farther than two lane widths from every lane.
    """
    proj = project_to_skeleton(track, p[0], p[1], lane)
    limit = 2.0 * track.lane_width
    if proj.distance > limit:
        raise OffTrackError(proj.distance, limit)
    return proj.deviation


def _sample_offset_curve(
    seg: Segment, offset: float, scale: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Points and cumulative lengths along a segment's offset curve."""
    length = _offset_length(seg, offset)
    step = MAX_SAMPLE_STEP * scale
    if seg.curvature != 0.0:
        rho = length / abs(seg.sweep)  # type: ignore[arg-type]
        step = min(step, math.sqrt(8.0 * CHORD_ERROR * scale * rho))
    n = max(1, int(math.ceil(length / step)))
    s = np.linspace(0.0, seg.arc_length, n + 1)
    x0, y0, h0 = seg.start.x, seg.start.y, seg.start.heading
    k = seg.curvature
    if k == 0.0:
        h = np.full_like(s, h0)
        x = x0 + s * math.cos(h0)
        y = y0 + s * math.sin(h0)
    else:
        r = 1.0 / k
        h = h0 + s * k
        x = x0 + r * (np.sin(h) - math.sin(h0))
        y = y0 - r * (np.cos(h) - math.cos(h0))
    x = x - offset * np.sin(h)
    y = y + offset * np.cos(h)
    return np.column_stack([x, y]), np.linspace(0.0, length, n + 1)


def _marking_runs(track: TrackModel, offset: float) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Contiguous marked stretches as (points, cumulative length) pairs."""
    runs: List[Tuple[np.ndarray, np.ndarray]] = []
    pts: List[np.ndarray] = []
    lens: List[np.ndarray] = []
    travelled = 0.0
    for seg in track.segments:
        seg_len = _offset_length(seg, offset)
        if seg.suppress_markings:
            if pts:
                runs.append((np.vstack(pts), np.concatenate(lens)))
                pts, lens = [], []
        else:
            p, l = _sample_offset_curve(seg, offset, track.scale)
            if pts:
                p, l = p[1:], l[1:]
            pts.append(p)
            lens.append(l + travelled)
        travelled += seg_len
    if pts:
        runs.append((np.vstack(pts), np.concatenate(lens)))
    return runs


def _cut(points: np.ndarray, lengths: np.ndarray, a: float, b: float) -> Optional[np.ndarray]:
    """Sub-polyline between cumulative lengths ``a`` and ``b``."""
    a, b = max(a, lengths[0]), min(b, lengths[-1])
    if b - a <= 1e-12:
        return None
    inner = points[(lengths > a) & (lengths < b)]
    start = np.array([np.interp(a, lengths, points[:, 0]), np.interp(a, lengths, points[:, 1])])
    end = np.array([np.interp(b, lengths, points[:, 0]), np.interp(b, lengths, points[:, 1])])
    return np.vstack([start, inner, end])


def lane_marking_segments(track: TrackModel) -> List[MarkingPolyline]:
    """World-frame marking polylines: solid left and right lines, dashed center.

    Intersection segments emit nothing. The dash pattern is measured along the
    center line from the start of the track.
    """
    polylines: List[MarkingPolyline] = []
    for side in (MarkingSide.LEFT, MarkingSide.CENTER, MarkingSide.RIGHT):
        offset = marking_offset(track, side)
        for points, lengths in _marking_runs(track, offset):
            if side != MarkingSide.CENTER:
                polylines.append(MarkingPolyline(side=side, points=points))
                continue
            period = track.dash_length + track.dash_gap
            k = math.floor(lengths[0] / period)
            while k * period < lengths[-1]:
                dash = _cut(points, lengths, k * period, k * period + track.dash_length)
                if dash is not None:
                    polylines.append(MarkingPolyline(side=side, points=dash))
                k += 1
    return polylines


def track_summary(track: TrackModel) -> Dict[str, float]:
    """Headline numbers used by the CLI."""
    return {
        "segments": float(len(track.segments)),
        "length_right": lane_length(track, LaneId.RIGHT),
        "length_left": lane_length(track, LaneId.LEFT),
        "lane_width": track.lane_width,
        "obstacles": float(len(track.world_boxes)),
        "scale": track.scale,
    }
