"""Closed-loop harness: scenarios, scheduling, safety checks, metrics and export."""

from .cache import RunCache
from .export import (
    export_metrics,
    export_run,
    export_trace,
    export_transitions,
    read_trace_csv,
    trace_to_dataframe,
)
from .metrics import compute_metrics, metrics_from_csv, metrics_from_frame
from .runner import ScenarioRunner, initial_state, load_scenario_track, run_scenario
from .safety import (
    CollisionMonitor,
    OffTrackMonitor,
    boxes_overlap,
    check_collision,
    check_off_track,
)
from .scenario import ScenarioConfig, apply_overrides, load_scenario, scenario_from_mapping
from .sweep import SweepRunner, expand_grid, write_sweep_csv

__all__ = [
    "RunCache",
    "export_metrics",
    "export_run",
    "export_trace",
    "export_transitions",
    "read_trace_csv",
    "trace_to_dataframe",
    "compute_metrics",
    "metrics_from_csv",
    "metrics_from_frame",
    "ScenarioRunner",
    "initial_state",
    "load_scenario_track",
    "run_scenario",
    "CollisionMonitor",
    "OffTrackMonitor",
    "boxes_overlap",
    "check_collision",
    "check_off_track",
    "ScenarioConfig",
    "apply_overrides",
    "load_scenario",
    "scenario_from_mapping",
    "SweepRunner",
    "expand_grid",
    "write_sweep_csv",
]
