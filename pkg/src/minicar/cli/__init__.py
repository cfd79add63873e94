"""Command-line interface for minicar."""

from .main import app

__all__ = ["app"]
