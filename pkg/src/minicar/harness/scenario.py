"""Scenario files: one TOML document per closed-loop experiment.

Example::

    [scenario]
    name = "lane"
    track = "tracks/exemplary.track"
    duration = 180.0
    mode = "lane"

    [perception]
    mode = "calibrated"

    [noise.all]
    kind = "dropout"
    p = 0.1
"""

import hashlib
import logging
import math
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Type, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..core.config import SimulationSettings
from ..core.exceptions import ScenarioConfigError
from ..core.models import (
    BehaviorMode,
    CameraConfig,
    ControllerConfig,
    DistanceSensorConfig,
    GapSearchConfig,
    LaneId,
    NoiseModel,
    OvertakeConfig,
    PerceptionMode,
    VehicleParams,
)
from ..sensors.suite import default_sensor_suite

logger = logging.getLogger(__name__)

RATE_TOLERANCE = 1e-6
NOISE_ALL = "all"
DEFAULT_BEHAVIOR_HZ = {BehaviorMode.OVERTAKE: 10.0, BehaviorMode.PARK: 40.0}


class ScenarioSection(BaseModel):
    name: str = "scenario"
    track: Optional[str] = None  # None selects the bundled exemplary track
    scale: Optional[float] = Field(default=None, gt=0.0)
    duration: float = Field(default=180.0, ge=0.0)
    seed: int = 0
    mode: BehaviorMode = BehaviorMode.LANE


class StartSection(BaseModel):
    s: float = Field(default=0.0, ge=0.0)
    lane: LaneId = LaneId.RIGHT
    lateral: float = 0.0  # positive to the left of the lane skeleton
    heading: float = 0.0  # added to the skeleton heading
    speed: float = 0.0


class RatesSection(BaseModel):
    physics_dt: float = Field(default=0.005, gt=0.0)
    behavior_hz: Optional[float] = Field(default=None, gt=0.0)


class PerceptionSection(BaseModel):
    mode: PerceptionMode = PerceptionMode.CALIBRATED
    rows: Optional[List[int]] = None
    row_count: int = Field(default=8, ge=1)
    min_rows: int = Field(default=2, ge=1)
    plausible_ratio: float = Field(default=1.6, gt=1.0)


class SensorSection(BaseModel):
    """Partial override of one distance sensor; unset fields keep the defaults."""

    enabled: bool = True
    mount_x: Optional[float] = None
    mount_y: Optional[float] = None
    mount_theta: Optional[float] = None
    opening_angle: Optional[float] = None
    max_range: Optional[float] = None
    ray_count: Optional[int] = None
    period: Optional[float] = None


class OdometrySection(BaseModel):
    tick: float = Field(default=0.0, ge=0.0)
    heading_sigma: float = Field(default=0.0, ge=0.0)


SECTION_MODELS: Dict[str, Type[BaseModel]] = {
    "scenario": ScenarioSection,
    "start": StartSection,
    "rates": RatesSection,
    "vehicle": VehicleParams,
    "controller": ControllerConfig,
    "perception": PerceptionSection,
    "camera": CameraConfig,
    "odometry": OdometrySection,
    "overtake": OvertakeConfig,
    "parking": GapSearchConfig,
}
TABLE_SECTIONS: Dict[str, Type[BaseModel]] = {
    "sensors": SensorSection,
    "noise": NoiseModel,
}
DERIVED_KEYS = {
    "overtake": {"max_steer_left", "max_steer_right", "period"},
    "parking": {"max_steer_left", "max_steer_right", "period", "trajectory"},
}


class ScenarioConfig(BaseModel):
    """Validated scenario; sections mirror the TOML tables."""

    model_config = ConfigDict(frozen=True)

    scenario: ScenarioSection = ScenarioSection()
    start: StartSection = StartSection()
    rates: RatesSection = RatesSection()
    vehicle: VehicleParams = VehicleParams()
    controller: ControllerConfig = ControllerConfig()
    perception: PerceptionSection = PerceptionSection()
    camera: CameraConfig = CameraConfig()
    sensors: Dict[str, SensorSection] = {}
    noise: Dict[str, NoiseModel] = {}
    odometry: OdometrySection = OdometrySection()
    overtake: OvertakeConfig = OvertakeConfig()
    parking: GapSearchConfig = GapSearchConfig()
    base_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check_rates(self) -> "ScenarioConfig":
        periods = {"camera": self.camera.period}
        if self.behavior_period is not None:
            periods["behavior"] = self.behavior_period
        for sensor in self.sensor_suite().values():
            periods[f"sensor {sensor.id}"] = sensor.period
        for name, period in periods.items():
            ratio = period / self.rates.physics_dt
            if ratio < 1.0 - RATE_TOLERANCE or abs(ratio - round(ratio)) > RATE_TOLERANCE:
                raise ValueError(
                    f"{name} period {period:g} s is not an integer multiple of "
                    f"physics dt {self.rates.physics_dt:g} s"
                )
        unknown = set(self.noise) - set(self.sensor_suite()) - {NOISE_ALL}
        if unknown:
            raise ValueError(f"noise declared for unknown sensors: {sorted(unknown)}")
        return self

    @property
    def behavior_period(self) -> Optional[float]:
        if self.scenario.mode == BehaviorMode.LANE:
            return None
        hz = self.rates.behavior_hz or DEFAULT_BEHAVIOR_HZ[self.scenario.mode]
        return 1.0 / hz

    def ticks(self, period: float) -> int:
        """Physics ticks per ``period``."""
        return max(1, int(round(period / self.rates.physics_dt)))

    @property
    def track_path(self) -> Optional[Path]:
        if self.scenario.track is None:
            return None
        path = Path(self.scenario.track)
        if not path.is_absolute() and self.base_dir is not None:
            path = Path(self.base_dir) / path
        return path

    def sensor_suite(self, scale: float = 1.0) -> Dict[str, DistanceSensorConfig]:
        """Default sensor layout merged with the ``[sensors.<id>]`` overrides."""
        suite = default_sensor_suite(scale)
        for sensor_id, section in self.sensors.items():
            if not section.enabled:
                suite.pop(sensor_id, None)
                continue
            updates = section.model_dump(exclude={"enabled"}, exclude_none=True)
            base = suite.get(sensor_id)
            if base is None:
                suite[sensor_id] = DistanceSensorConfig(id=sensor_id, **updates)
            else:
                suite[sensor_id] = DistanceSensorConfig(**{**base.model_dump(), **updates})
        return suite

    def noise_for(self, sensor_id: str) -> NoiseModel:
        return self.noise.get(sensor_id) or self.noise.get(NOISE_ALL) or NoiseModel()

    def overtake_config(self, scale: float = 1.0) -> OvertakeConfig:
        """Overtake thresholds with the distance thresholds scaled to the track."""
        return self.overtake.model_copy(
            update={
                "engage_threshold": self.overtake.engage_threshold * scale,
                "alignment_threshold": self.overtake.alignment_threshold * scale,
                "max_steer_left": self.vehicle.max_steer_left,
                "max_steer_right": self.vehicle.max_steer_right,
                "period": self.behavior_period or self.overtake.period,
            }
        )

    def controller_config(self) -> ControllerConfig:
        return self.controller.model_copy(
            update={
                "max_steer_left": self.vehicle.max_steer_left,
                "max_steer_right": self.vehicle.max_steer_right,
            }
        )

    def fingerprint(self, track_text: str = "") -> str:
        """Stable hash of the resolved scenario and its track document."""
        payload = self.model_dump_json(exclude={"base_dir"}) + "\n" + track_text
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def parse_override(item: str) -> tuple:
    """Split ``section.key=value`` into a key path and a TOML-typed value."""
    if "=" not in item:
        raise ScenarioConfigError(f"override '{item}' must look like section.key=value")
    key, raw = item.split("=", 1)
    path = [part.strip() for part in key.strip().split(".") if part.strip()]
    if len(path) < 2:
        raise ScenarioConfigError(f"override key '{key}' must name a section and a key")
    try:
        value: Any = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return path, value


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply dotted overrides to a raw scenario mapping (returns a new mapping)."""
    result = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for item in overrides:
        path, value = parse_override(item)
        node = result
        for part in path[:-1]:
            child = node.get(part)
            child = dict(child) if isinstance(child, dict) else {}
            node[part] = child
            node = child
        node[path[-1]] = value
    return result


def _check_keys(raw: Dict[str, Any]) -> None:
    problems = []
    for section, body in raw.items():
        if section in SECTION_MODELS:
            allowed = set(SECTION_MODELS[section].model_fields) - DERIVED_KEYS.get(section, set())
            if not isinstance(body, dict):
                problems.append(f"[{section}] must be a table")
                continue
            problems += [f"unknown key '{section}.{k}'" for k in body if k not in allowed]
        elif section in TABLE_SECTIONS:
            allowed = set(TABLE_SECTIONS[section].model_fields)
            for name, table in (body or {}).items():
                if not isinstance(table, dict):
                    problems.append(f"[{section}.{name}] must be a table")
                    continue
                problems += [
                    f"unknown key '{section}.{name}.{k}'" for k in table if k not in allowed
                ]
        else:
            problems.append(f"unknown section [{section}]")
    if problems:
        raise ScenarioConfigError("; ".join(problems))


def scenario_from_mapping(
    raw: Dict[str, Any], base_dir: Optional[Union[str, Path]] = None
) -> ScenarioConfig:
    """Validate a raw mapping into a ScenarioConfig."""
    _check_keys(raw)
    try:
        return ScenarioConfig(**raw, base_dir=str(base_dir) if base_dir is not None else None)
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ScenarioConfigError(f"invalid scenario: {details}") from e


def apply_defaults(raw: Dict[str, Any], simulation: SimulationSettings) -> Dict[str, Any]:
    """Fill the physics step and seed from application settings where the file omits them."""
    result = dict(raw)
    rates = dict(result.get("rates") or {})
    rates.setdefault("physics_dt", simulation.physics_dt)
    scenario = dict(result.get("scenario") or {})
    scenario.setdefault("seed", simulation.seed)
    result.update(rates=rates, scenario=scenario)
    return result


def load_scenario(
    path: Union[str, Path],
    overrides: Sequence[str] = (),
    simulation: Optional[SimulationSettings] = None,
) -> ScenarioConfig:
    """Read a scenario TOML file, apply overrides and validate.

    Settings defaults apply first, then the file, then the overrides.

    Raises:
        ScenarioConfigError: For unreadable files, TOML errors, unknown keys,
            invalid values or rates that are not multiples of the physics step.
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ScenarioConfigError(f"cannot read scenario {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ScenarioConfigError(f"{path}: {e}") from e
    if simulation is not None:
        raw = apply_defaults(raw, simulation)
    raw = apply_overrides(raw, overrides)
    cfg = scenario_from_mapping(raw, base_dir=path.parent)
    logger.debug(f"Loaded scenario {cfg.scenario.name} from {path}")
    return cfg


def scaled_vehicle(params: VehicleParams, scale: float) -> VehicleParams:
    """Vehicle geometry and top speed multiplied by the track scale."""
    if math.isclose(scale, 1.0):
        return params
    return params.model_copy(
        update={
            "wheelbase": params.wheelbase * scale,
            "body_length": params.body_length * scale,
            "body_width": params.body_width * scale,
            "rear_overhang": params.rear_overhang * scale,
            "v_max": params.v_max * scale,
        }
    )


def scaled_camera(camera: CameraConfig, scale: float) -> CameraConfig:
    """Camera mount, marking width and render range multiplied by the track scale."""
    if math.isclose(scale, 1.0):
        return camera
    return camera.model_copy(
        update={
            "mount_x": camera.mount_x * scale,
            "mount_y": camera.mount_y * scale,
            "mount_z": camera.mount_z * scale,
            "marking_width": camera.marking_width * scale,
            "render_range": camera.render_range * scale,
        }
    )
