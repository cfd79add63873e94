"""Application settings loaded from config.toml, .env and the environment."""

import logging
from functools import lru_cache
from pathlib import Path
from typing import Optional, Tuple, Type

from pydantic import BaseModel, Field
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

DEFAULT_CONFIG_FILE = Path("config.toml")


class GeneralSettings(BaseModel):
    name: str = "minicar"
    version: str = "0.1.0"
    description: str = "Closed-loop simulator for a 1/10-scale self-driving car"


class SimulationSettings(BaseModel):
    physics_dt: float = Field(default=0.005, gt=0.0)
    seed: int = 0


class OutputSettings(BaseModel):
    directory: str = "outputs"
    plot_format: str = "svg"
    plots: bool = True


class CacheConfig(BaseModel):
    """Sweep result cache settings."""

    enabled: bool = True
    directory: str = ".cache"
    expire_after: int = 604800  # 1 week in seconds
    max_size: str = "1GB"

    @property
    def max_size_bytes(self) -> int:
        """Convert max_size string to bytes."""
        size_str = self.max_size.upper()
        for suffix, factor in (("GB", 1024**3), ("MB", 1024**2), ("KB", 1024)):
            if size_str.endswith(suffix):
                return int(size_str[: -len(suffix)]) * factor
        return int(size_str)


class LoggingSettings(BaseModel):
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Settings(BaseSettings):
    """Top-level settings; environment variables use the ``MINICAR_`` prefix."""

    model_config = SettingsConfigDict(
        env_prefix="MINICAR_",
        env_nested_delimiter="__",
        env_file=".env",
        extra="ignore",
        toml_file=DEFAULT_CONFIG_FILE,
    )

    general: GeneralSettings = GeneralSettings()
    simulation: SimulationSettings = SimulationSettings()
    output: OutputSettings = OutputSettings()
    cache: CacheConfig = CacheConfig()
    logging: LoggingSettings = LoggingSettings()

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            TomlConfigSettingsSource(settings_cls),
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the process-wide settings."""
    return Settings()


def configure_logging(settings: Optional[Settings] = None) -> None:
    """Configure the root logger from settings."""
    settings = settings or get_settings()
    logging.basicConfig(
        level=getattr(logging, settings.logging.level.upper(), logging.INFO),
        format=settings.logging.format,
    )
