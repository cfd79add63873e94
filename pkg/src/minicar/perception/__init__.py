"""Scan-line lane perception and arc fitting."""

from .arcfit import evaluate_offset, fit_arc
from .scanlines import (
    PerceptionPipeline,
    calibrate_targets,
    center_points,
    default_scan_rows,
    lateral_error,
    scan_rows,
    write_scan_csv,
)

__all__ = [
    "evaluate_offset",
    "fit_arc",
    "PerceptionPipeline",
    "calibrate_targets",
    "center_points",
    "default_scan_rows",
    "lateral_error",
    "scan_rows",
    "write_scan_csv",
]
