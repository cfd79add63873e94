"""
minicar: closed-loop simulation of a 1/10-scale self-driving car.

A track description language, a kinematic vehicle, ray-cast distance sensors and
a rendered monocular camera drive scan-line lane detection, a PI lane controller
and the overtaking and parking state machines in a deterministic fixed-step loop.
"""

from .behavior import OvertakeMachine, ParkMachine
from .core.models import (
    ControlCommand,
    Metrics,
    Trace,
    TrackModel,
    VehicleParams,
    VehicleState,
)
from .harness import ScenarioConfig, load_scenario, run_scenario
from .track import load_track, parse_track

__version__ = "0.1.0"

__all__ = [
    # Core models
    "TrackModel",
    "VehicleParams",
    "VehicleState",
    "ControlCommand",
    "Trace",
    "Metrics",
    # Track
    "load_track",
    "parse_track",
    # Behavior
    "OvertakeMachine",
    "ParkMachine",
    # Harness
    "ScenarioConfig",
    "load_scenario",
    "run_scenario",
]
