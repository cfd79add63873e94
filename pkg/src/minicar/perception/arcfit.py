"""Algebraic circle fit over lane center points with one outlier-rejection pass."""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.models import ArcFit

logger = logging.getLogger(__name__)

KAPPA_MAX = 1.0  # 1/px
OUTLIER_FACTOR = 3.0
RESIDUAL_FLOOR = 1e-9


def _algebraic_fit(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """Fit A(x²+y²) + Bx + Cy + D = 0 on normalized points.

    Returns the coefficient vector, the normalization center and the scale.
    """
    center = points.mean(axis=0)
    scale = float(np.sqrt(((points - center) ** 2).sum(axis=1).mean())) or 1.0
    q = (points - center) / scale
    design = np.column_stack([(q**2).sum(axis=1), q[:, 0], q[:, 1], np.ones(len(q))])
    _, _, vt = np.linalg.svd(design)
    return vt[-1], center, scale


def _residuals(
    coef: np.ndarray, points: np.ndarray, center: np.ndarray, scale: float
) -> np.ndarray:
    a, b, c, d = coef
    q = (points - center) / scale
    f = a * (q**2).sum(axis=1) + b * q[:, 0] + c * q[:, 1] + d
    gx, gy = 2.0 * a * q[:, 0] + b, 2.0 * a * q[:, 1] + c
    grad = np.hypot(gx, gy)
    return np.abs(f) / np.where(grad > 0.0, grad, np.inf) * scale


def _to_arc(
    coef: np.ndarray, center: np.ndarray, scale: float, points: np.ndarray
) -> Optional[ArcFit]:
    a, b, c, d = coef
    res = _residuals(coef, points, center, scale)
    rms = float(np.sqrt(np.mean(res**2)))
    if abs(a) < 1e-12:
        return ArcFit(curvature=0.0, inliers=len(points), rms=rms, degenerate=False)
    disc = b * b + c * c - 4.0 * a * d
    if disc <= 0.0:
        return None
    kappa = 2.0 * abs(a) / math.sqrt(disc) / scale
    cx = center[0] + scale * (-b / (2.0 * a))
    cy = center[1] + scale * (-c / (2.0 * a))
    if kappa >= KAPPA_MAX:
        return None
    sign = 1.0 if cx < points[:, 0].mean() else -1.0
    return ArcFit(
        curvature=sign * kappa,
        inliers=len(points),
        rms=rms,
        degenerate=False,
        center=(float(cx), float(cy)),
    )


def fit_arc(centers: Sequence[Tuple[float, float]]) -> ArcFit:
    """Fit the best matching arc through ``(row, center offset)`` points.

    Points are fitted in image coordinates (x = center offset, y = row). After a
    first fit, points whose geometric residual exceeds three times the median
    residual are dropped and the circle is fitted once more. Curvature is
    positive when the circle center lies left of the points (a left curve).
    """
    if len(centers) < 3:
        return ArcFit(inliers=0, degenerate=True)
    pts = np.array([(offset, row) for row, offset in centers], dtype=float)

    coef, center, scale = _algebraic_fit(pts)
    res = _residuals(coef, pts, center, scale)
    limit = max(OUTLIER_FACTOR * float(np.median(res)), RESIDUAL_FLOOR)
    keep = res <= limit
    if not keep.all():
        pts = pts[keep]
        if len(pts) < 3:
            return ArcFit(inliers=int(len(pts)), degenerate=True)
        coef, center, scale = _algebraic_fit(pts)

    fit = _to_arc(coef, center, scale, pts)
    if fit is None:
        return ArcFit(inliers=int(len(pts)), degenerate=True)
    return fit


def evaluate_offset(fit: ArcFit, centers: Sequence[Tuple[float, float]], row: float) -> float:
    """Center offset of the fitted curve at ``row``.

    Uses the circle branch closest to the observed points; falls back to a
    straight-line fit when no circle is available.
    """
    pts = np.array([(r, x) for r, x in centers], dtype=float)
    if fit.center is None or fit.curvature == 0.0:
        if len(pts) >= 2 and np.ptp(pts[:, 0]) > 0.0:
            slope, intercept = np.polyfit(pts[:, 0], pts[:, 1], 1)
            return float(slope * row + intercept)
        return float(pts[:, 1].mean())
    cx, cy = fit.center
    radius = 1.0 / abs(fit.curvature)
    dy = row - cy
    if abs(dy) > radius:
        return float(pts[:, 1].mean())
    half = math.sqrt(radius * radius - dy * dy)
    branch = cx + half if pts[:, 1].mean() > cx else cx - half
    return float(branch)
