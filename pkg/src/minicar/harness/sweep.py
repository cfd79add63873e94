"""Cartesian parameter sweeps over one scenario."""

import itertools
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import polars as pl

from ..core.config import SimulationSettings
from ..core.exceptions import ExportError, ScenarioConfigError
from ..core.models import EventKind, Metrics
from ..track import exemplary_track_path
from .cache import RunCache
from .runner import run_scenario
from .scenario import load_scenario

logger = logging.getLogger(__name__)


def parse_param(item: str) -> Tuple[str, List[str]]:
    """Split ``section.key=v1,v2,...`` into the key and its raw values."""
    if "=" not in item:
        raise ScenarioConfigError(f"sweep parameter '{item}' must look like key=v1,v2")
    key, raw = item.split("=", 1)
    values = [v.strip() for v in raw.split(",") if v.strip()]
    if not key.strip() or not values:
        raise ScenarioConfigError(f"sweep parameter '{item}' needs a key and values")
    return key.strip(), values


def expand_grid(params: Sequence[str]) -> List[Dict[str, str]]:
    """All combinations of the sweep parameters, in declaration order."""
    parsed = [parse_param(p) for p in params]
    keys = [key for key, _ in parsed]
    return [dict(zip(keys, combo)) for combo in itertools.product(*(v for _, v in parsed))]


def summarize(metrics: Metrics) -> Dict[str, Any]:
    """Flat summary of one run's metrics."""
    parking = metrics.parking
    return {
        "mean_deviation": metrics.mean_deviation,
        "max_deviation": metrics.max_deviation,
        "distance_driven": metrics.distance_driven,
        "duration": metrics.duration,
        "collisions": metrics.penalties.get(EventKind.COLLISION.value, 0),
        "off_track": metrics.penalties.get(EventKind.OFF_TRACK.value, 0),
        "parking_outcome": parking.outcome if parking else None,
        "parking_duration": parking.duration if parking else None,
    }


class SweepRunner:
    """Runs every parameter combination, reusing cached metrics when possible."""

    def __init__(
        self,
        cache: Optional[RunCache] = None,
        simulation: Optional[SimulationSettings] = None,
    ):
        self.cache = cache
        self.simulation = simulation
        self.logger = logger

    def run_one(self, scenario: Union[str, Path], overrides: Sequence[str]) -> Tuple[Metrics, bool]:
        """Metrics of one resolved scenario and whether they came from the cache."""
        cfg = load_scenario(scenario, overrides, self.simulation)
        track_path = cfg.track_path or exemplary_track_path()
        try:
            fingerprint = cfg.fingerprint(track_path.read_text(encoding="utf-8"))
        except OSError as e:
            raise ScenarioConfigError(f"cannot read track {track_path}: {e}") from e

        if self.cache is not None:
            cached = self.cache.get(fingerprint)
            if cached is not None:
                self.logger.debug(f"Cache hit for {list(overrides)}")
                return cached, True
        _, metrics = run_scenario(cfg)
        if self.cache is not None:
            self.cache.set(fingerprint, cfg.scenario.name, metrics)
        return metrics, False

    def run(
        self,
        scenario: Union[str, Path],
        params: Sequence[str],
        overrides: Sequence[str] = (),
    ) -> pl.DataFrame:
        """One summary row per parameter combination."""
        grid = expand_grid(params)
        self.logger.info(f"Sweeping {scenario} over {len(grid)} combinations")
        rows = []
        for combo in grid:
            combo_overrides = list(overrides) + [f"{k}={v}" for k, v in combo.items()]
            metrics, cached = self.run_one(scenario, combo_overrides)
            rows.append({**combo, **summarize(metrics), "cached": cached})
        return pl.DataFrame(rows)


def write_sweep_csv(summary: pl.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        summary.write_csv(path)
    except OSError as e:
        raise ExportError(str(path), str(e)) from e
    return path
