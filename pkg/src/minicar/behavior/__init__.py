"""Overtaking and parking state machines."""

from .overtaking import OvertakeMachine, overtake_tick, passing_command, plausibility_check
from .parking import (
    ParkMachine,
    best_fit_select,
    park_tick,
    plan_parking_trajectory,
)

__all__ = [
    "OvertakeMachine",
    "overtake_tick",
    "passing_command",
    "plausibility_check",
    "ParkMachine",
    "best_fit_select",
    "park_tick",
    "plan_parking_trajectory",
]
