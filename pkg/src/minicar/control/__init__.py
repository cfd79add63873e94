"""Lane-keeping control."""

from .pi import pi_step, speed_policy

__all__ = ["pi_step", "speed_policy"]
