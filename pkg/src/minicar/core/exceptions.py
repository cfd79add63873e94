"""Exception hierarchy for minicar."""

from dataclasses import dataclass, field
from typing import List, Optional


class MinicarError(Exception):
    """Base class for all minicar errors."""


@dataclass(frozen=True)
class Diagnostic:
    """A single positioned message produced while reading a track document."""

    line: int
    column: int
    message: str
    expected: List[str] = field(default_factory=list)

    def format(self, path: Optional[str] = None) -> str:
        """Render as ``file:line:col: message``."""
        text = self.message
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        return f"{path or '<track>'}:{self.line}:{self.column}: {text}"


class TrackError(MinicarError, ValueError):
    """Raised when a track document cannot be turned into a TrackModel."""

    def __init__(self, diagnostics: List[Diagnostic]):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0].format() if self.diagnostics else "invalid track"
        super().__init__(first)

    def format(self, path: Optional[str] = None) -> str:
        return "\n".join(d.format(path) for d in self.diagnostics)


class TrackSyntaxError(TrackError):
    """Malformed track document."""


class TrackSemanticError(TrackError):
    """Well-formed document describing an invalid track."""


class OffTrackError(MinicarError, ValueError):
    """Raised when a point lies too far from every lane skeleton."""

    def __init__(self, distance: float, limit: float):
        self.distance = distance
        self.limit = limit
        super().__init__(
            f"point is {distance:.3f} m from the nearest lane (limit {limit:.3f} m)"
        )


class ScenarioConfigError(MinicarError, ValueError):
    """Raised for invalid scenario files or overrides."""


class ExportError(MinicarError, OSError):
    """Raised when writing a trace, plot or image dump fails."""

    def __init__(self, path: str, reason: str, action: str = "write"):
        self.path = path
        self.action = action
        super().__init__(f"cannot {action} {path}: {reason}")
