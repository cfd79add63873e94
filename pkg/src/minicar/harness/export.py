"""Trace, transition and metrics files."""

import logging
from pathlib import Path
from typing import Callable, List, Union

import pandas as pd

from ..core.exceptions import ExportError
from ..core.models import Metrics, Trace

logger = logging.getLogger(__name__)

BASE_COLUMNS = ["t", "x", "y", "psi", "v", "delta", "odometer"]
TAIL_COLUMNS = [
    "e", "e_valid", "acc", "y_cmd", "kappa", "psi_meas", "deviation", "gap", "phase", "event",
]
TRANSITION_COLUMNS = ["t", "machine", "from_phase", "to_phase", "trigger"]
EVENT_SEPARATOR = ";"


def reading_column(sensor_id: str) -> str:
    return f"d_{sensor_id}"


def trace_columns(sensor_ids: List[str]) -> List[str]:
    return BASE_COLUMNS + [reading_column(s) for s in sensor_ids] + TAIL_COLUMNS


def trace_to_dataframe(trace: Trace) -> pd.DataFrame:
    """One row per physics tick in the exported column order."""
    rows = []
    for r in trace.records:
        row = {
            "t": r.t,
            "x": r.x,
            "y": r.y,
            "psi": r.psi,
            "v": r.v,
            "delta": r.delta,
            "odometer": r.odometer,
        }
        for sensor_id in trace.sensor_ids:
            row[reading_column(sensor_id)] = r.readings.get(sensor_id, -1.0)
        row.update(
            e=r.e,
            e_valid=r.e_valid,
            acc=r.acc,
            y_cmd=r.y_cmd,
            kappa=r.kappa,
            psi_meas=r.psi_meas,
            deviation=r.deviation,
            gap=r.gap,
            phase=r.phase,
            event=EVENT_SEPARATOR.join(e.value for e in r.events),
        )
        rows.append(row)
    frame = pd.DataFrame(rows, columns=trace_columns(trace.sensor_ids))
    for column in ("psi_meas", "deviation", "gap"):
        frame[column] = pd.to_numeric(frame[column], errors="coerce")
    return frame


def _write(path: Path, action: str, write: Callable[[Path], object]) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        write(path)
    except OSError as e:
        raise ExportError(str(path), str(e)) from e
    logger.debug(f"Wrote {action} to {path}")
    return path


def export_trace(trace: Trace, path: Union[str, Path]) -> Path:
    """Write the trace CSV; floats keep their shortest round-trip representation."""
    frame = trace_to_dataframe(trace)
    return _write(Path(path), "trace", lambda p: frame.to_csv(p, index=False))


def read_trace_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Read an exported trace back with the exact float values that were written."""
    try:
        return pd.read_csv(
            path,
            keep_default_na=False,
            na_values={"psi_meas": [""], "deviation": [""], "gap": [""]},
            dtype={"phase": str, "event": str},
            float_precision="round_trip",
        )
    except (OSError, pd.errors.ParserError) as e:
        raise ExportError(str(path), str(e), action="read") from e


def export_transitions(trace: Trace, path: Union[str, Path]) -> Path:
    """Write the behavior phase transitions as CSV."""
    frame = pd.DataFrame(
        [tr.model_dump() for tr in trace.transitions], columns=TRANSITION_COLUMNS
    )
    return _write(Path(path), "transitions", lambda p: frame.to_csv(p, index=False))


def export_metrics(metrics: Metrics, path: Union[str, Path]) -> Path:
    """Write metrics as indented JSON."""
    text = metrics.model_dump_json(indent=2)
    return _write(Path(path), "metrics", lambda p: p.write_text(text, encoding="utf-8"))


def export_run(trace: Trace, metrics: Metrics, directory: Union[str, Path]) -> List[Path]:
    """Write ``trace.csv``, ``transitions.csv`` and ``metrics.json`` into ``directory``."""
    directory = Path(directory)
    return [
        export_trace(trace, directory / "trace.csv"),
        export_transitions(trace, directory / "transitions.csv"),
        export_metrics(metrics, directory / "metrics.json"),
    ]
