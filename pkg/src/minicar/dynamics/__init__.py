"""Vehicle motion model."""

from .bicycle import step, turning_radius

__all__ = ["step", "turning_radius"]
