"""Fixed-step closed-loop scheduler.

Every physics tick runs, in order: the distance sensors that are due, the camera
and perception when a frame is due, lane control, the behavior machine when it
is due, then one dynamics step. Records hold the state at the start of the tick.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..behavior.overtaking import OvertakeMachine
from ..behavior.parking import ParkMachine, plan_parking_trajectory
from ..control.pi import pi_step, speed_policy
from ..core.exceptions import OffTrackError, ScenarioConfigError
from ..core.models import (
    SENTINEL,
    ArcFit,
    BehaviorMode,
    ControlCommand,
    EventKind,
    GapSearchConfig,
    LateralError,
    Metrics,
    PiState,
    SensorReading,
    Trace,
    TraceRecord,
    TrackModel,
    VehicleState,
)
from ..dynamics.bicycle import step
from ..perception.scanlines import (
    PerceptionPipeline,
    calibrate_targets,
    default_scan_rows,
    write_scan_csv,
)
from ..sensors.camera import CameraRenderer, write_pgm
from ..sensors.noise import NoiseChannel, substream
from ..sensors.odometry import read_heading, read_odometer
from ..sensors.rays import RayCaster
from ..sensors.suite import (
    IR_SIDE_FRONT_RIGHT,
    IR_SIDE_REAR_RIGHT,
    US_FRONT,
    US_FRONT_RIGHT,
)
from ..track import deviation_from_skeleton, exemplary_track_path, load_track, skeleton_pose
from .metrics import compute_metrics
from .safety import CollisionMonitor, OffTrackMonitor
from .scenario import ScenarioConfig, scaled_camera, scaled_vehicle

logger = logging.getLogger(__name__)


def load_scenario_track(cfg: ScenarioConfig) -> TrackModel:
    """Track named by the scenario, or the bundled exemplary course."""
    path = cfg.track_path or exemplary_track_path()
    try:
        return load_track(path, scale=cfg.scenario.scale)
    except OSError as e:
        raise ScenarioConfigError(f"cannot read track {path}: {e}") from e


def initial_state(cfg: ScenarioConfig, track: TrackModel) -> VehicleState:
    """Vehicle pose from the ``[start]`` section, relative to a lane skeleton."""
    pose = skeleton_pose(track, cfg.start.lane, cfg.start.s)
    lateral = cfg.start.lateral
    return VehicleState(
        x=pose.x - lateral * math.sin(pose.heading),
        y=pose.y + lateral * math.cos(pose.heading),
        heading=pose.heading + cfg.start.heading,
        speed=cfg.start.speed,
    )


def parking_config(cfg: ScenarioConfig, track: TrackModel, sensor_offset: float) -> GapSearchConfig:
    """Gap search settings with the trajectory planned for this vehicle and lane."""
    params = scaled_vehicle(cfg.vehicle, track.scale)
    shift = track.lane_width / 2.0 + cfg.parking.lateral_target + params.half_width
    trajectory = plan_parking_trajectory(params, shift, sensor_offset)
    return cfg.parking.model_copy(
        update={
            "max_steer_left": params.max_steer_left,
            "max_steer_right": params.max_steer_right,
            "period": cfg.behavior_period or cfg.parking.period,
            "trajectory": trajectory,
        }
    )


class ScenarioRunner:
    """Wires track, vehicle, sensors, perception, control and behavior for one run.

    Args:
        cfg: Validated scenario.
        dump_dir: Directory for PGM camera frames and the scan CSV, or None.
        dump_every: Write every n-th camera frame when dumping.
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        dump_dir: Optional[Union[str, Path]] = None,
        dump_every: int = 1,
    ):
        self.cfg = cfg
        self.logger = logger
        self.dump_dir = Path(dump_dir) if dump_dir is not None else None
        self.dump_every = max(1, dump_every)

        self.track = load_scenario_track(cfg)
        scale = self.track.scale
        self.params = scaled_vehicle(cfg.vehicle, scale)
        self.dt = cfg.rates.physics_dt
        self.mode = cfg.scenario.mode

        self.suite = cfg.sensor_suite(scale)
        self.sensor_ids = sorted(self.suite)
        self.sensor_ticks = {sid: cfg.ticks(s.period) for sid, s in self.suite.items()}
        self.caster = RayCaster(self.track)
        self.channels = {
            sid: NoiseChannel(cfg.noise_for(sid), cfg.scenario.seed, sid, sensor.max_range)
            for sid, sensor in self.suite.items()
        }
        self.heading_rng = substream(cfg.scenario.seed, "heading")

        camera = scaled_camera(cfg.camera, scale)
        self.camera_ticks = cfg.ticks(camera.period)
        self.renderer = CameraRenderer(camera, self.track)
        rows = cfg.perception.rows or default_scan_rows(
            camera.image_height, cfg.perception.row_count
        )
        targets = calibrate_targets(camera, self.track.lane_width, rows=rows)
        self.pipeline = PerceptionPipeline(
            cfg.perception.mode,
            rows,
            targets,
            cfg.perception.min_rows,
            cfg.perception.plausible_ratio,
            record_scans=self.dump_dir is not None,
        )

        self.controller = cfg.controller_config()
        self.overtake: Optional[OvertakeMachine] = None
        self.park: Optional[ParkMachine] = None
        if self.mode == BehaviorMode.OVERTAKE:
            self.overtake = OvertakeMachine(cfg.overtake_config(scale))
        elif self.mode == BehaviorMode.PARK:
            sensor = self.suite.get(US_FRONT_RIGHT)
            if sensor is None:
                raise ValueError(f"parking needs the {US_FRONT_RIGHT} sensor")
            self.park = ParkMachine(parking_config(cfg, self.track, sensor.mount_x))
        period = cfg.behavior_period
        self.behavior_ticks = cfg.ticks(period) if period is not None else None

        self.collisions = CollisionMonitor(self.track.world_boxes)
        self.off_track = OffTrackMonitor(
            self.track.lane_width / 2.0 + self.params.half_width, self.dt
        )

    def _reading(self, readings: Dict[str, SensorReading], sensor_id: str) -> SensorReading:
        return readings.get(sensor_id) or SensorReading(sensor_id=sensor_id, d=SENTINEL)

    @property
    def _passthrough(self) -> bool:
        machine = self.overtake or self.park
        return machine is None or machine.passthrough

    def _lane_command(self, lane_cmd: ControlCommand) -> ControlCommand:
        if self.overtake is not None:
            return self.overtake.lane_command(lane_cmd)
        return lane_cmd

    def _phase(self) -> str:
        if self.overtake is not None:
            return self.overtake.state.phase.value
        if self.park is not None:
            return self.park.state.phase.value
        return "lane"

    def _behavior(
        self,
        t: float,
        readings: Dict[str, SensorReading],
        odometer: float,
        lane_cmd: ControlCommand,
        kappa: Optional[float],
    ) -> ControlCommand:
        if self.overtake is not None:
            return self.overtake.tick(
                t,
                self._reading(readings, US_FRONT),
                self._reading(readings, US_FRONT_RIGHT),
                self._reading(readings, IR_SIDE_FRONT_RIGHT),
                self._reading(readings, IR_SIDE_REAR_RIGHT),
                lane_cmd,
            )
        assert self.park is not None
        return self.park.tick(t, self._reading(readings, US_FRONT_RIGHT), odometer, lane_cmd, kappa)

    def _deviation(self, state: VehicleState) -> Optional[float]:
        try:
            return deviation_from_skeleton(self.track, (state.x, state.y))
        except OffTrackError:
            return None

    def run(self) -> Tuple[Trace, Metrics]:
        cfg = self.cfg
        dt = self.dt
        n_ticks = int(round(cfg.scenario.duration / dt))
        trace = Trace(dt=dt, sensor_ids=self.sensor_ids)
        self.logger.info(
            f"Running scenario {cfg.scenario.name}: mode={self.mode.value}, "
            f"{n_ticks} ticks of {dt * 1000:g} ms, seed={cfg.scenario.seed}"
        )

        state = initial_state(cfg, self.track)
        readings: Dict[str, SensorReading] = {}
        error = LateralError()
        arc = ArcFit()
        pi = PiState()
        behavior_cmd = ControlCommand()
        fresh_kappa: Optional[float] = None

        for k in range(n_ticks):
            t = k * dt
            events: List[EventKind] = []

            for sid in self.sensor_ids:
                if k % self.sensor_ticks[sid] == 0:
                    raw = self.caster.distance(self.suite[sid], state, t)
                    readings[sid] = self.channels[sid].apply(raw)

            if k % self.camera_ticks == 0:
                image = self.renderer.render(state, t)
                error, arc = self.pipeline.process(image)
                fresh_kappa = 0.0 if arc.degenerate else arc.curvature
                frame = self.pipeline.frame - 1
                if self.dump_dir is not None and frame % self.dump_every == 0:
                    write_pgm(image, self.dump_dir / f"frame_{frame:06d}.pgm")

            steering, pi_next = pi_step(pi, error, dt, self.controller)
            override = self.park.cfg.approach_speed if self.park is not None else None
            kappa = None if arc.degenerate else arc.curvature
            lane_cmd = ControlCommand(
                steering=steering, speed=speed_policy(kappa, override, self.controller)
            )
            if self._passthrough:
                pi = pi_next

            cmd = lane_cmd
            if self.behavior_ticks is not None:
                if k % self.behavior_ticks == 0:
                    odometer = read_odometer(state, cfg.odometry.tick)
                    behavior_cmd = self._behavior(t, readings, odometer, lane_cmd, fresh_kappa)
                    fresh_kappa = None
                    if self.park is not None:
                        events.extend(self.park.events)
                cmd = self._lane_command(lane_cmd) if self._passthrough else behavior_cmd

            gap = None
            if EventKind.GAP_FOUND in events and self.park is not None:
                measured = self.park.measured_gap
                gap = measured.width if measured is not None else None

            hit = self.collisions.update(state.footprint(self.params))
            if hit is not None:
                events.append(hit)
            deviation = self._deviation(state)
            if self.park is not None and (
                self.park.executing_trajectory or self.park.state.terminal
            ):
                self.off_track.reset()
            else:
                excursion = self.off_track.update(deviation)
                if excursion is not None:
                    events.append(excursion)

            trace.append(
                TraceRecord(
                    t=t,
                    x=state.x,
                    y=state.y,
                    psi=state.heading,
                    v=state.speed,
                    delta=state.steering,
                    odometer=state.odometer,
                    readings={sid: self._reading(readings, sid).d for sid in self.sensor_ids},
                    e=error.e,
                    e_valid=error.valid,
                    acc=pi.integral,
                    y_cmd=pi.output,
                    kappa=arc.curvature,
                    psi_meas=read_heading(state, cfg.odometry.heading_sigma, self.heading_rng),
                    deviation=deviation,
                    gap=gap,
                    phase=self._phase(),
                    events=events,
                )
            )

            if self.park is not None and self.park.state.terminal:
                self.logger.info(f"Stopping at t={t:.3f}: parking {self._phase()}")
                break
            state = step(state, cmd, self.params, dt)

        if self.overtake is not None:
            trace.transitions.extend(self.overtake.transitions)
        if self.park is not None:
            trace.transitions.extend(self.park.transitions)
        if self.dump_dir is not None:
            write_scan_csv(self.pipeline.scan_log, self.dump_dir / "scans.csv")

        metrics = compute_metrics(trace, self.track, self.params)
        self.logger.info(
            f"Finished {cfg.scenario.name}: {len(trace)} ticks, "
            f"mean deviation {metrics.mean_deviation:.4f} m, penalties {metrics.penalties}"
        )
        return trace, metrics


def run_scenario(
    cfg: ScenarioConfig,
    dump_dir: Optional[Union[str, Path]] = None,
    dump_every: int = 1,
) -> Tuple[Trace, Metrics]:
    """Run one scenario to its duration or to a terminal behavior phase."""
    return ScenarioRunner(cfg, dump_dir=dump_dir, dump_every=dump_every).run()
