"""Disk cache of run metrics keyed by scenario fingerprint."""

import hashlib
import logging
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Dict, Optional, Union

import diskcache as dc

from ..core.config import CacheConfig
from ..core.models import Metrics

logger = logging.getLogger(__name__)


class RunCache:
    """Caches the metrics of finished runs so repeated sweeps skip them."""

    def __init__(self, config: Optional[CacheConfig] = None):
        """Initialize the run cache.

        Args:
            config: Cache configuration. Uses defaults if None.
        """
        self.config = config or CacheConfig()
        self.cache_dir = Path(self.config.directory)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.cache = dc.Cache(str(self.cache_dir), size_limit=self.config.max_size_bytes)
        self.logger = logger

    def _make_key(self, fingerprint: str) -> str:
        return hashlib.sha256(f"run:{fingerprint}".encode()).hexdigest()[:32]

    def get(self, fingerprint: str) -> Optional[Metrics]:
        """Cached metrics for a scenario fingerprint, or None if missing or expired."""
        key = self._make_key(fingerprint)
        try:
            entry = self.cache.get(key)
            if entry is None:
                return None
            cached_time = datetime.fromisoformat(entry["timestamp"])
            if datetime.now() > cached_time + timedelta(seconds=self.config.expire_after):
                self.cache.delete(key)
                return None
            return Metrics.model_validate(entry["metrics"])
        except (KeyError, ValueError, TypeError):
            self.logger.debug(f"Dropping unreadable cache entry {key}")
            self.cache.delete(key)
            return None

    def set(self, fingerprint: str, scenario: str, metrics: Metrics) -> None:
        """Store the metrics of one run."""
        self.cache.set(
            self._make_key(fingerprint),
            {
                "timestamp": datetime.now().isoformat(),
                "scenario": scenario,
                "metrics": metrics.model_dump(mode="json"),
            },
        )

    def clear(self) -> int:
        """Remove all entries; returns how many there were."""
        count = len(self.cache)
        self.cache.clear()
        return count

    def stats(self) -> Dict[str, Union[int, float, str]]:
        cache_size = self.cache.volume()
        return {
            "total_entries": len(self.cache),
            "cache_size_bytes": cache_size,
            "cache_size_mb": round(cache_size / (1024 * 1024), 2),
            "cache_directory": str(self.cache_dir),
            "max_size": self.config.max_size,
        }

    def close(self) -> None:
        self.cache.close()

    def __enter__(self) -> "RunCache":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()
