"""Track description language and geometric queries."""

from importlib.resources import files
from pathlib import Path

from .dsl import TrackParser, load_track, parse_track, serialize_track
from .geometry import (
    SkeletonProjection,
    deviation_from_skeleton,
    lane_length,
    lane_marking_segments,
    project_to_skeleton,
    skeleton_pose,
    track_summary,
)


def exemplary_track_path() -> Path:
    """Path of the bundled exemplary course."""
    return Path(str(files(__package__).joinpath("data", "exemplary.track")))


__all__ = [
    "TrackParser",
    "load_track",
    "parse_track",
    "serialize_track",
    "SkeletonProjection",
    "deviation_from_skeleton",
    "lane_length",
    "lane_marking_segments",
    "project_to_skeleton",
    "skeleton_pose",
    "track_summary",
    "exemplary_track_path",
]
