"""Core data models for minicar."""

import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

CHAIN_TOLERANCE = 1e-9
SENTINEL = -1.0


def normalize_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.atan2(math.sin(angle), math.cos(angle))
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


# --------------------------------------------------------------------------
# Track
# --------------------------------------------------------------------------


class SegmentKind(str, Enum):
    """Kinds of track segments."""

    STRAIGHT = "straight"
    ARC = "arc"
    INTERSECTION = "intersection"


class LaneId(str, Enum):
    """The two lanes of the road; segments describe the right lane skeleton."""

    RIGHT = "right"
    LEFT = "left"


class MarkingSide(str, Enum):
    """Lane marking lines."""

    LEFT = "left"
    CENTER = "center"
    RIGHT = "right"


class Pose(BaseModel):
    """Planar pose in world coordinates."""

    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    heading: float

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


class Segment(BaseModel):
    """One piece of the right lane skeleton line."""

    model_config = ConfigDict(frozen=True)

    kind: SegmentKind
    start: Pose
    length: Optional[float] = None
    radius: Optional[float] = None  # signed, positive turns left
    sweep: Optional[float] = None

    @model_validator(mode="after")
    def _check_shape(self) -> "Segment":
        if self.kind == SegmentKind.ARC:
            if self.radius is None or self.sweep is None:
                raise ValueError("arc segments need radius and sweep")
            if self.radius == 0.0 or not math.isfinite(self.radius):
                raise ValueError("arc radius must be non-zero")
            if self.sweep == 0.0 or not math.isfinite(self.sweep):
                raise ValueError("arc sweep must be non-zero")
        else:
            if self.length is None or not self.length > 0.0:
                raise ValueError(f"{self.kind.value} length must be > 0")
        return self

    @property
    def arc_length(self) -> float:
        if self.kind == SegmentKind.ARC:
            return abs(self.radius * self.sweep)  # type: ignore[operator]
        return float(self.length)  # type: ignore[arg-type]

    @property
    def curvature(self) -> float:
        if self.kind == SegmentKind.ARC:
            return 1.0 / self.radius  # type: ignore[operator]
        return 0.0

    @property
    def suppress_markings(self) -> bool:
        return self.kind == SegmentKind.INTERSECTION

    def pose_at(self, s: float, offset: float = 0.0) -> Pose:
        """Pose at arc length ``s`` on a line offset ``offset`` meters to the left."""
        x0, y0, h0 = self.start.x, self.start.y, self.start.heading
        k = self.curvature
        if k == 0.0:
            x = x0 + s * math.cos(h0)
            y = y0 + s * math.sin(h0)
            h = h0
        else:
            r = 1.0 / k
            h = h0 + s * k
            x = x0 + r * (math.sin(h) - math.sin(h0))
            y = y0 - r * (math.cos(h) - math.cos(h0))
        if offset:
            x -= offset * math.sin(h)
            y += offset * math.cos(h)
        return Pose(x=x, y=y, heading=normalize_angle(h))

    @property
    def end(self) -> Pose:
        return self.pose_at(self.arc_length)


class ObstacleBox(BaseModel):
    """Oriented rectangular obstacle."""

    model_config = ConfigDict(frozen=True)

    center: Tuple[float, float]
    half_extents: Tuple[float, float]  # (w/2 across, l/2 along heading)
    heading: float = 0.0

    @field_validator("half_extents")
    @classmethod
    def _positive_extents(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] <= 0.0 or v[1] <= 0.0:
            raise ValueError("half-extents must be > 0")
        return v

    def corners(self) -> np.ndarray:
        """Corners in counter-clockwise order as a (4, 2) array."""
        hw, hl = self.half_extents
        c, s = math.cos(self.heading), math.sin(self.heading)
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.asarray(self.center)


class MarkingPolyline(BaseModel):
    """World-frame polyline approximating one painted lane marking piece."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    side: MarkingSide
    points: np.ndarray  # (N, 2)


class ParkingStrip(BaseModel):
    """Boxes parked right of the right lane marking along one straight segment."""

    model_config = ConfigDict(frozen=True)

    anchor_segment: int = Field(ge=0)
    boxes: List[ObstacleBox] = []
    spans: List[Tuple[float, float]] = []  # (s_start, s_end) along the lane
    lateral_offsets: List[float] = []  # distance from the right marking

    @model_validator(mode="after")
    def _check_boxes(self) -> "ParkingStrip":
        if len(self.spans) != len(self.boxes) or len(self.lateral_offsets) != len(
            self.boxes
        ):
            raise ValueError("spans and lateral offsets must match the boxes")
        if any(off < 0.0 for off in self.lateral_offsets):
            raise ValueError("parking boxes must lie right of the right marking")
        for (_, prev_end), (start, _) in zip(self.spans, self.spans[1:]):
            if start < prev_end - CHAIN_TOLERANCE:
                raise ValueError("gaps between parking boxes must be >= 0")
        return self


class TrackModel(BaseModel):
    """Immutable road description: segments, markings context and obstacles."""

    model_config = ConfigDict(frozen=True)

    segments: List[Segment]
    lane_width: float = Field(default=0.4, gt=0.0)
    obstacles: List[ObstacleBox] = []
    parking_strip: Optional[ParkingStrip] = None
    scale: float = Field(default=1.0, gt=0.0)
    scale_lane_width: bool = True
    closed: bool = False
    dash_length: float = Field(default=0.2, gt=0.0)
    dash_gap: float = Field(default=0.2, gt=0.0)

    @model_validator(mode="after")
    def _check_chain(self) -> "TrackModel":
        if not self.segments:
            raise ValueError("a track needs at least one segment")
        for i, (a, b) in enumerate(zip(self.segments, self.segments[1:])):
            end = a.end
            if end.distance_to(b.start) > CHAIN_TOLERANCE * max(1.0, self.scale) or (
                abs(normalize_angle(end.heading - b.start.heading)) > CHAIN_TOLERANCE
            ):
                raise ValueError(f"segment {i + 1} does not start where segment {i} ends")
        return self

    @property
    def min_radius(self) -> float:
        return 1.0 * self.scale

    @property
    def length(self) -> float:
        return sum(seg.arc_length for seg in self.segments)

    @property
    def world_boxes(self) -> List[ObstacleBox]:
        """All obstacles including the parking strip boxes."""
        boxes = list(self.obstacles)
        if self.parking_strip is not None:
            boxes.extend(self.parking_strip.boxes)
        return boxes


# --------------------------------------------------------------------------
# Vehicle
# --------------------------------------------------------------------------


def _default_steer_limit() -> float:
    return math.atan(0.26 / 0.7)


class VehicleParams(BaseModel):
    """Geometry and actuator limits of the car."""

    model_config = ConfigDict(frozen=True)

    wheelbase: float = Field(default=0.26, gt=0.0)
    max_steer_left: float = Field(default_factory=_default_steer_limit, gt=0.0, lt=math.pi / 2)
    max_steer_right: float = Field(default_factory=_default_steer_limit, gt=0.0, lt=math.pi / 2)
    v_max: float = Field(default=2.5, gt=0.0)
    body_length: float = Field(default=0.40, gt=0.0)
    body_width: float = Field(default=0.18, gt=0.0)
    rear_overhang: float = Field(default=0.07, ge=0.0)
    steer_sweep_time: float = Field(default=0.4, gt=0.0)
    accel_time: float = Field(default=1.0, gt=0.0)

    @classmethod
    def from_turning_radii(
        cls, wheelbase: float, radius_left: float, radius_right: float, **kwargs: float
    ) -> "VehicleParams":
        """Build params from minimum turning radii instead of steering limits."""
        return cls(
            wheelbase=wheelbase,
            max_steer_left=math.atan(wheelbase / radius_left),
            max_steer_right=math.atan(wheelbase / radius_right),
            **kwargs,
        )

    @property
    def half_width(self) -> float:
        return self.body_width / 2.0

    @property
    def half_length(self) -> float:
        return self.body_length / 2.0

    @property
    def body_center_offset(self) -> float:
        """Distance from the rear axle to the body center along the heading."""
        return self.half_length - self.rear_overhang

    @property
    def steer_rate(self) -> float:
        return (self.max_steer_left + self.max_steer_right) / self.steer_sweep_time

    @property
    def accel(self) -> float:
        return self.v_max / self.accel_time


class VehicleState(BaseModel):
    """Bicycle-model state; the reference point is the rear axle center."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0
    steering: float = 0.0
    odometer: float = Field(default=0.0, ge=0.0)
    yaw_rate: float = 0.0

    @field_validator("heading")
    @classmethod
    def _wrap_heading(cls, v: float) -> float:
        return normalize_angle(v)

    def footprint(self, params: VehicleParams) -> ObstacleBox:
        """Body rectangle in world coordinates."""
        off = params.body_center_offset
        return ObstacleBox(
            center=(
                self.x + off * math.cos(self.heading),
                self.y + off * math.sin(self.heading),
            ),
            half_extents=(params.half_width, params.half_length),
            heading=self.heading,
        )


class ControlCommand(BaseModel):
    """Steering and speed targets; clamped to vehicle limits when applied."""

    steering: float = 0.0
    speed: float = 0.0

    @field_validator("steering", "speed")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("command values must be finite")
        return v


# --------------------------------------------------------------------------
# Sensors
# --------------------------------------------------------------------------


class DistanceSensorConfig(BaseModel):
    """A cone-shaped distance sensor approximated by evenly spread rays."""

    model_config = ConfigDict(frozen=True)

    id: str
    mount_x: float = 0.0
    mount_y: float = 0.0
    mount_theta: float = 0.0
    opening_angle: float = Field(gt=0.0, lt=math.pi)
    max_range: float = Field(gt=0.0)
    ray_count: int = Field(default=1, ge=1)
    period: float = Field(gt=0.0)


class SensorReading(BaseModel):
    """One distance sample; ``d == -1`` means no echo within range."""

    sensor_id: str
    timestamp: float = 0.0
    d: float = SENTINEL

    @field_validator("d")
    @classmethod
    def _sentinel_or_positive(cls, v: float) -> float:
        if v != SENTINEL and not v > 0.0:
            raise ValueError("distance must be -1 or > 0")
        return v

    @property
    def has_echo(self) -> bool:
        return self.d > 0.0


class RayHitSet(BaseModel):
    """Per-ray intersection points and distances (None where nothing was hit)."""

    points: List[Optional[Tuple[float, float]]] = []
    distances: List[Optional[float]] = []

    @property
    def nearest(self) -> Optional[float]:
        hits = [d for d in self.distances if d is not None]
        return min(hits) if hits else None


class CameraConfig(BaseModel):
    """Pinhole camera looking down at the track surface."""

    model_config = ConfigDict(frozen=True)

    mount_x: float = 0.2
    mount_y: float = 0.0
    mount_z: float = Field(default=0.2, gt=0.0)
    pitch: float = math.radians(-20.0)
    hfov: float = Field(default=math.radians(90.0), gt=0.0, lt=math.pi)
    vfov: Optional[float] = Field(default=None, gt=0.0, lt=math.pi)
    image_width: int = Field(default=752, gt=0)
    image_height: int = Field(default=480, gt=0)
    period: float = Field(default=0.05, gt=0.0)
    marking_width: float = Field(default=0.02, gt=0.0)
    render_range: float = Field(default=3.0, gt=0.0)

    @model_validator(mode="after")
    def _square_pixels(self) -> "CameraConfig":
        if self.pitch >= 0.0:
            raise ValueError("camera pitch must point toward the ground")
        if self.vfov is None:
            half = math.atan(
                math.tan(self.hfov / 2.0) * self.image_height / self.image_width
            )
            object.__setattr__(self, "vfov", 2.0 * half)
        return self

    @property
    def fx(self) -> float:
        return (self.image_width / 2.0) / math.tan(self.hfov / 2.0)

    @property
    def fy(self) -> float:
        return (self.image_height / 2.0) / math.tan(self.vfov / 2.0)  # type: ignore[operator]

    @property
    def cx(self) -> float:
        return (self.image_width - 1) / 2.0

    @property
    def cy(self) -> float:
        return (self.image_height - 1) / 2.0


class CameraImage(BaseModel):
    """Binary lane-marking raster, row-major, 1 = marking pixel."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    width: int
    height: int
    data: np.ndarray
    timestamp: float = 0.0

    @model_validator(mode="after")
    def _check_shape(self) -> "CameraImage":
        if self.data.shape != (self.height, self.width):
            raise ValueError(
                f"image data has shape {self.data.shape}, "
                f"expected ({self.height}, {self.width})"
            )
        return self


class NoiseKind(str, Enum):
    """Supported fault and noise injections."""

    NONE = "none"
    GAUSSIAN = "gaussian"
    DROPOUT = "dropout"
    STUCK_AT = "stuck_at"


class NoiseModel(BaseModel):
    """Noise or fault applied to a sensor reading stream."""

    model_config = ConfigDict(frozen=True)

    kind: NoiseKind = NoiseKind.NONE
    sigma: float = Field(default=0.0, ge=0.0)
    p: float = Field(default=0.0, ge=0.0, le=1.0)
    value: Optional[float] = None  # stuck-at value; None freezes the first reading
    start: float = Field(default=0.0, ge=0.0)
    duration: float = Field(default=0.0, ge=0.0)
    stream: Optional[str] = None


# --------------------------------------------------------------------------
# Perception and control
# --------------------------------------------------------------------------


class PerceptionMode(str, Enum):
    """How the lateral error is derived from scan-lines."""

    CALIBRATED = "calibrated"
    BALANCED = "balanced"
    ARC = "arc"


class ScanLineResult(BaseModel):
    """Distances from the image center column to the first marking pixel."""

    row: int
    left: Optional[float] = Field(default=None, ge=0.0)
    right: Optional[float] = Field(default=None, ge=0.0)


class LateralError(BaseModel):
    """Lateral error in pixels; positive when the car sits right of its line."""

    e: float = 0.0
    valid: bool = False
    rows: int = Field(default=0, ge=0)


class ArcFit(BaseModel):
    """Circle fitted to lane center points in image coordinates."""

    curvature: float = 0.0  # 1/pixels, positive = left curve
    inliers: int = Field(default=0, ge=0)
    rms: float = 0.0
    degenerate: bool = True
    center: Optional[Tuple[float, float]] = None


class PiState(BaseModel):
    """Integrator and hold bookkeeping of the lane-keeping controller."""

    integral: float = 0.0
    held_e: Optional[float] = None
    age: float = Field(default=0.0, ge=0.0)
    output: float = 0.0  # last y before scaling and clamping


class ControllerConfig(BaseModel):
    """Gains and limits of the lane-keeping controller and speed policy."""

    model_config = ConfigDict(frozen=True)

    kp: float = 2.5
    ki: float = 8.5
    i_max: float = Field(default=23.5, gt=0.0)
    hold_time: float = Field(default=0.5, ge=0.0)
    decay: float = Field(default=0.9, ge=0.0, le=1.0)
    steer_scale: float = Field(default=0.001, gt=0.0)
    max_steer_left: float = Field(default_factory=_default_steer_limit, gt=0.0)
    max_steer_right: float = Field(default_factory=_default_steer_limit, gt=0.0)
    cruise_speed: float = Field(default=1.0, ge=0.0)
    curve_gain: float = Field(default=500.0, ge=0.0)
    min_speed: float = Field(default=0.5, ge=0.0)


# --------------------------------------------------------------------------
# Behavior
# --------------------------------------------------------------------------


class OvertakePhase(str, Enum):
    """Phases of the overtaking machine."""

    MOVE_FORWARD = "MoveForward"
    CHECK_OBJECT_PLAUSIBLE = "CheckObjectPlausible"
    TO_LEFT_LANE_LEFT_TURN = "ToLeftLaneLeftTurn"
    ALIGN_RIGHT_TURN = "AlignRightTurn"
    PASS_OBSTACLE = "PassObstacle"
    RETURN_RIGHT_TURN = "ReturnRightTurn"
    RETURN_LEFT_TURN = "ReturnLeftTurn"


PASSTHROUGH_PHASES = frozenset(
    {
        OvertakePhase.MOVE_FORWARD,
        OvertakePhase.CHECK_OBJECT_PLAUSIBLE,
        OvertakePhase.PASS_OBSTACLE,
    }
)


class PlausibilityVerdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    PENDING = "pending"


class OvertakeConfig(BaseModel):
    """Thresholds of the overtaking machine."""

    model_config = ConfigDict(frozen=True)

    engage_threshold: float = Field(default=0.9, gt=0.0)
    alignment_threshold: float = Field(default=0.01, gt=0.0)
    window: int = Field(default=5, ge=2)
    min_echoes: int = Field(default=4, ge=2)  # valid samples in a full window
    tolerance: float = Field(default=0.05, ge=0.0)  # m/s on the closing speed
    maneuver_speed: float = Field(default=0.3, gt=0.0)
    # right-turn ticks beyond counter_left after which the heading counts as restored
    reversal_ticks: int = Field(default=3, ge=0)
    pass_exit_samples: int = Field(default=3, ge=1)
    max_steer_left: float = Field(default_factory=_default_steer_limit, gt=0.0)
    max_steer_right: float = Field(default_factory=_default_steer_limit, gt=0.0)
    period: float = Field(default=0.1, gt=0.0)

    @model_validator(mode="after")
    def _check_echoes(self) -> "OvertakeConfig":
        if self.min_echoes > self.window:
            raise ValueError(
                f"min_echoes {self.min_echoes} exceeds the plausibility window {self.window}"
            )
        return self


class OvertakeState(BaseModel):
    """State of the overtaking machine."""

    phase: OvertakePhase = OvertakePhase.MOVE_FORWARD
    counter_left: int = Field(default=0, ge=0)
    counter_right: int = Field(default=0, ge=0)
    window: List[float] = []
    pass_misses: int = Field(default=0, ge=0)
    ir_armed: bool = False
    last_ir_diff: Optional[float] = None

    @property
    def passthrough(self) -> bool:
        return self.phase in PASSTHROUGH_PHASES


class ParkPhase(str, Enum):
    """Phases of the parking machine."""

    TRIGGER_MEASUREMENTS = "TriggerMeasurements"
    FIND_BEGINNING_OF_GAP = "FindBeginningOfGap"
    FIND_END_OF_GAP = "FindEndOfGap"
    ADVANCE_TO_START = "AdvanceToStart"
    TRAJECTORY = "Trajectory"
    DONE = "Done"
    FAILED = "Failed"


class TrajectoryStep(str, Enum):
    """Progress through the static reverse trajectory (Tr-1 to Tr-3)."""

    STEER_RIGHT = "Tr1-steer"
    REVERSE_RIGHT = "Tr1-Tr2"
    STEER_LEFT = "Tr2-steer"
    REVERSE_LEFT = "Tr2-Tr3"


class SearchStrategy(str, Enum):
    FIRST_FIT = "first_fit"
    BEST_FIT = "best_fit"


class Termination(str, Enum):
    CURVE_BEGIN = "curve_begin"
    TOTAL_DISTANCE = "total_distance"


class GapCandidate(BaseModel):
    """A measured gap: odometer at its start and end events."""

    start: float
    end: float

    @property
    def width(self) -> float:
        return self.end - self.start


class ParkingTrajectory(BaseModel):
    """Two-arc reverse trajectory derived from the minimum turning radii."""

    model_config = ConfigDict(frozen=True)

    arc_right: float = Field(gt=0.0)  # Tr-1 -> Tr-2 odometer length
    arc_left: float = Field(gt=0.0)  # Tr-2 -> Tr-3 odometer length
    longitudinal_shift: float = Field(gt=0.0)
    lateral_shift: float = Field(gt=0.0)
    sensor_offset: float  # front-right sensor x relative to the rear axle
    body_center_offset: float

    def advance_for(self, gap_width: float, short_advance: float) -> float:
        """Forward travel from the gap end event to the reverse start point."""
        return (
            self.sensor_offset
            - gap_width / 2.0
            - self.body_center_offset
            + self.longitudinal_shift
            + short_advance
        )


class GapSearchConfig(BaseModel):
    """Gap search and parking maneuver settings."""

    model_config = ConfigDict(frozen=True)

    vehicle_length: float = Field(default=0.40, gt=0.0)
    acting_margin: Optional[float] = Field(default=None, gt=0.0)
    strategy: SearchStrategy = SearchStrategy.FIRST_FIT
    termination: Termination = Termination.TOTAL_DISTANCE
    total_distance: float = Field(default=10.0, gt=0.0)
    short_advance: float = Field(default=0.05, ge=0.0)
    approach_speed: float = Field(default=0.5, gt=0.0)
    reverse_speed: float = Field(default=0.3, gt=0.0)
    creep_speed: float = Field(default=0.05, gt=0.0)
    stop_gain: float = Field(default=1.5, gt=0.0)
    curve_threshold: float = Field(default=3e-4, gt=0.0)
    curve_frames: int = Field(default=10, ge=1)
    steer_settle_time: float = Field(default=0.45, ge=0.0)
    # odometer unchanged this long counts as standing; must cover braking across one encoder tick
    stop_time: float = Field(default=0.15, gt=0.0)
    lateral_target: float = Field(default=0.05, ge=0.0)
    max_steer_left: float = Field(default_factory=_default_steer_limit, gt=0.0)
    max_steer_right: float = Field(default_factory=_default_steer_limit, gt=0.0)
    period: float = Field(default=0.025, gt=0.0)
    trajectory: Optional[ParkingTrajectory] = None

    @model_validator(mode="after")
    def _default_margin(self) -> "GapSearchConfig":
        if self.acting_margin is None:
            object.__setattr__(self, "acting_margin", 0.25 * self.vehicle_length)
        return self

    @property
    def min_gap(self) -> float:
        return self.vehicle_length + float(self.acting_margin)  # type: ignore[arg-type]


class ParkState(BaseModel):
    """State of the parking machine."""

    phase: ParkPhase = ParkPhase.TRIGGER_MEASUREMENTS
    odo_mark_1: Optional[float] = None
    odo_mark_2: Optional[float] = None
    measuring: bool = False
    last_d_u: Optional[float] = None
    found_gaps: List[GapCandidate] = []
    chosen: Optional[GapCandidate] = None
    move_start: float = 0.0
    move_distance: float = 0.0  # signed: negative drives backward
    move_target: Optional[float] = None  # drive-line position to reach once stopped
    tr_marks: List[float] = []
    step: Optional[TrajectoryStep] = None
    settle_ticks: int = 0
    last_odometer: Optional[float] = None
    still_ticks: int = Field(default=0, ge=0)
    curve_frames: int = 0

    @model_validator(mode="after")
    def _marks_ordered(self) -> "ParkState":
        if (
            self.odo_mark_1 is not None
            and self.odo_mark_2 is not None
            and self.odo_mark_2 < self.odo_mark_1
        ):
            raise ValueError("odo_mark_2 must not precede odo_mark_1")
        return self

    @property
    def terminal(self) -> bool:
        return self.phase in (ParkPhase.DONE, ParkPhase.FAILED)

    @property
    def passthrough(self) -> bool:
        return self.phase in (
            ParkPhase.TRIGGER_MEASUREMENTS,
            ParkPhase.FIND_BEGINNING_OF_GAP,
            ParkPhase.FIND_END_OF_GAP,
        )


# --------------------------------------------------------------------------
# Harness
# --------------------------------------------------------------------------


class BehaviorMode(str, Enum):
    LANE = "lane"
    OVERTAKE = "overtake"
    PARK = "park"


class EventKind(str, Enum):
    COLLISION = "collision"
    OFF_TRACK = "off_track"
    GAP_FOUND = "gap_found"
    PARKED = "parked"
    PARK_FAILED = "park_failed"


class PhaseTransition(BaseModel):
    """One logged behavior phase change."""

    t: float
    machine: str
    from_phase: str
    to_phase: str
    trigger: str = ""


class TraceRecord(BaseModel):
    """State, readings and commands of one physics tick."""

    t: float
    x: float
    y: float
    psi: float
    v: float
    delta: float
    odometer: float
    readings: Dict[str, float] = {}
    e: float = 0.0
    e_valid: bool = False
    acc: float = 0.0
    y_cmd: float = 0.0
    kappa: float = 0.0
    psi_meas: Optional[float] = None  # heading as the sensor reports it
    deviation: Optional[float] = None
    gap: Optional[float] = None  # width of a gap accepted on this tick
    phase: str = ""
    events: List[EventKind] = []


class Trace(BaseModel):
    """Append-only log of a run, one record per physics tick."""

    dt: float = Field(default=0.005, gt=0.0)
    sensor_ids: List[str] = []
    records: List[TraceRecord] = []
    transitions: List[PhaseTransition] = []

    def append(self, record: TraceRecord) -> None:
        if self.records and record.t <= self.records[-1].t:
            raise ValueError("trace timestamps must be strictly increasing")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)


class ParkingMetrics(BaseModel):
    """Outcome of a parking run."""

    outcome: Optional[str] = None
    duration: Optional[float] = None
    heading_error_deg: Optional[float] = None
    front_clearance: Optional[float] = None
    rear_clearance: Optional[float] = None
    gap_widths: List[float] = []


class Metrics(BaseModel):
    """Aggregates derived from a trace."""

    mean_deviation: float = 0.0
    max_deviation: float = 0.0
    max_deviation_t: Optional[float] = None
    distance_driven: float = 0.0
    duration: float = 0.0
    penalties: Dict[str, int] = {}
    parking: Optional[ParkingMetrics] = None
    phase_durations: Dict[str, float] = {}
