"""Core data models, settings and errors for minicar."""

from .config import CacheConfig, Settings, configure_logging, get_settings
from .exceptions import (
    Diagnostic,
    ExportError,
    MinicarError,
    OffTrackError,
    ScenarioConfigError,
    TrackError,
    TrackSemanticError,
    TrackSyntaxError,
)

__all__ = [
    "CacheConfig",
    "Settings",
    "configure_logging",
    "get_settings",
    "Diagnostic",
    "ExportError",
    "MinicarError",
    "OffTrackError",
    "ScenarioConfigError",
    "TrackError",
    "TrackSemanticError",
    "TrackSyntaxError",
]
