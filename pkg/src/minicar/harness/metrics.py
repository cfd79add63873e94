"""Run metrics, derived only from the trace so an exported CSV reproduces them."""

import logging
import math
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..core.models import (
    EventKind,
    Metrics,
    ParkingMetrics,
    ParkPhase,
    Trace,
    TrackModel,
    VehicleParams,
    VehicleState,
    normalize_angle,
)
from .export import EVENT_SEPARATOR, read_trace_csv, trace_to_dataframe

logger = logging.getLogger(__name__)

PARK_PHASES = {p.value for p in ParkPhase}
# the vehicle leaves the lane on purpose while it parks
NON_LANE_PHASES = {ParkPhase.TRAJECTORY.value, ParkPhase.DONE.value}
PENALTY_KINDS = (EventKind.COLLISION, EventKind.OFF_TRACK)


def _event_counts(events: pd.Series) -> Dict[str, int]:
    counts = {kind.value: 0 for kind in PENALTY_KINDS}
    for cell in events:
        for token in str(cell).split(EVENT_SEPARATOR):
            if token in counts:
                counts[token] += 1
    return counts


def _clearances(
    final: VehicleState, track: TrackModel, params: VehicleParams
) -> Tuple[Optional[float], Optional[float], float]:
    """Front and rear clearance to the strip boxes and the heading error in degrees."""
    strip = track.parking_strip
    assert strip is not None
    anchor = track.segments[strip.anchor_segment].start
    tangent = np.array([math.cos(anchor.heading), math.sin(anchor.heading)])
    origin = np.array([anchor.x, anchor.y])

    car = (final.footprint(params).corners() - origin) @ tangent
    car_center = float(car.mean())
    front: Optional[float] = None
    rear: Optional[float] = None
    for box in strip.boxes:
        u = (box.corners() - origin) @ tangent
        if u.mean() > car_center:
            gap = float(u.min() - car.max())
            front = gap if front is None else min(front, gap)
        else:
            gap = float(car.min() - u.max())
            rear = gap if rear is None else min(rear, gap)
    heading_error = abs(math.degrees(normalize_angle(final.heading - anchor.heading)))
    return front, rear, heading_error


def _parking_metrics(
    frame: pd.DataFrame, track: TrackModel, params: VehicleParams
) -> ParkingMetrics:
    phases = frame["phase"]
    last_phase = str(phases.iloc[-1])
    terminal = (ParkPhase.DONE.value, ParkPhase.FAILED.value)
    outcome = last_phase if last_phase in terminal else "incomplete"

    duration = None
    advancing = frame.loc[phases == ParkPhase.ADVANCE_TO_START.value, "t"]
    done = frame.loc[phases == ParkPhase.DONE.value, "t"]
    if len(advancing) and len(done):
        duration = float(done.iloc[0] - advancing.iloc[0])

    metrics = ParkingMetrics(
        outcome=outcome,
        duration=duration,
        gap_widths=[float(g) for g in frame["gap"].dropna()],
    )
    if outcome == ParkPhase.DONE.value and track.parking_strip is not None:
        last = frame.iloc[-1]
        final = VehicleState(x=float(last["x"]), y=float(last["y"]), heading=float(last["psi"]))
        front, rear, heading_error = _clearances(final, track, params)
        metrics = metrics.model_copy(
            update={
                "front_clearance": front,
                "rear_clearance": rear,
                "heading_error_deg": heading_error,
            }
        )
    return metrics


def metrics_from_frame(
    frame: pd.DataFrame, track: TrackModel, params: VehicleParams, dt: float
) -> Metrics:
    """Aggregate a trace table into run metrics."""
    if frame.empty:
        return Metrics(penalties={kind.value: 0 for kind in PENALTY_KINDS})

    lane = frame[~frame["phase"].isin(NON_LANE_PHASES)]
    deviation = lane["deviation"].dropna().abs()
    mean_deviation = float(deviation.mean()) if len(deviation) else 0.0
    max_deviation = float(deviation.max()) if len(deviation) else 0.0
    max_t = float(lane.loc[deviation.idxmax(), "t"]) if len(deviation) else None

    counts = frame["phase"].value_counts()
    phase_durations = {str(phase): int(n) * dt for phase, n in sorted(counts.items())}

    parking = None
    if set(frame["phase"].unique()) & PARK_PHASES:
        parking = _parking_metrics(frame, track, params)

    return Metrics(
        mean_deviation=mean_deviation,
        max_deviation=max_deviation,
        max_deviation_t=max_t,
        distance_driven=float(frame["odometer"].iloc[-1]),
        duration=len(frame) * dt,
        penalties=_event_counts(frame["event"]),
        parking=parking,
        phase_durations=phase_durations,
    )


def compute_metrics(trace: Trace, track: TrackModel, params: VehicleParams) -> Metrics:
    """Metrics of an in-memory trace."""
    return metrics_from_frame(trace_to_dataframe(trace), track, params, trace.dt)


def metrics_from_csv(
    path: Union[str, Path], track: TrackModel, params: VehicleParams, dt: float
) -> Metrics:
    """Recompute metrics from an exported trace CSV."""
    frame = read_trace_csv(path)
    logger.debug(f"Recomputing metrics from {len(frame)} rows of {path}")
    return metrics_from_frame(frame, track, params, dt)
