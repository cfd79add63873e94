"""Noise and fault injection on sensor reading streams."""

import logging
import math
import zlib
from typing import Optional

import numpy as np

from ..core.models import SENTINEL, NoiseKind, NoiseModel, SensorReading

logger = logging.getLogger(__name__)

MIN_NOISY_DISTANCE = 1e-3


def substream(seed: int, tag: str) -> np.random.Generator:
    """Independent generator for one named stream of a seeded run."""
    return np.random.default_rng((seed & 0xFFFFFFFF) ^ zlib.crc32(tag.encode("utf-8")))


def _active(m: NoiseModel, t: float) -> bool:
    if t < m.start:
        return False
    return m.duration == 0.0 or t < m.start + m.duration


def apply_noise(
    r: SensorReading,
    m: NoiseModel,
    rng: np.random.Generator,
    max_range: float = math.inf,
    frozen: Optional[float] = None,
) -> SensorReading:
    """Apply one noise model to a reading.

    Gaussian and dropout draw from ``rng`` on every call so the stream position
    does not depend on the readings. Sentinel readings pass through unchanged
    except for stuck-at faults, which output ``m.value`` (or ``frozen``, the
    reading captured when the fault began) while active. A zero ``duration``
    keeps a fault active until the end of the run.
    """
    if m.kind == NoiseKind.NONE:
        return r

    if m.kind == NoiseKind.GAUSSIAN:
        jitter = float(rng.normal(0.0, m.sigma)) if m.sigma > 0.0 else 0.0
        if not r.has_echo or not _active(m, r.timestamp):
            return r
        d = min(max(r.d + jitter, MIN_NOISY_DISTANCE), max_range)
        return r.model_copy(update={"d": d})

    if m.kind == NoiseKind.DROPOUT:
        drop = float(rng.random()) < m.p
        if drop and r.has_echo and _active(m, r.timestamp):
            return r.model_copy(update={"d": SENTINEL})
        return r

    # stuck-at
    if not _active(m, r.timestamp):
        return r
    value = m.value if m.value is not None else frozen
    if value is None:
        return r
    return r.model_copy(update={"d": value if value > 0.0 else SENTINEL})


class NoiseChannel:
    """Noise model bound to its own random substream and stuck-at memory."""

    def __init__(self, model: NoiseModel, seed: int, sensor_id: str, max_range: float = math.inf):
        self.model = model
        self.max_range = max_range
        self.rng = substream(seed, model.stream or sensor_id)
        self.frozen: Optional[float] = None
        self.logger = logger

    def apply(self, reading: SensorReading) -> SensorReading:
        if (
            self.model.kind == NoiseKind.STUCK_AT
            and self.frozen is None
            and _active(self.model, reading.timestamp)
        ):
            self.frozen = reading.d
            self.logger.debug(
                f"{reading.sensor_id} stuck at {self.model.value or reading.d} "
                f"from t={reading.timestamp:.3f}"
            )
        return apply_noise(reading, self.model, self.rng, self.max_range, self.frozen)
