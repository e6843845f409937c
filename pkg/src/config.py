"""
Configuration for sphere-metrics.

Defaults can be overridden with SPHERE_METRICS_* environment variables or a
.env file in the working directory.
"""
import logging
from functools import lru_cache
from typing import List

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class ConfigurationError(Exception):
    """Raised when settings or an experiment configuration are invalid."""
    pass


class Settings(BaseSettings):
    """Library-wide numerical and runtime settings."""

    model_config = SettingsConfigDict(
        env_prefix="SPHERE_METRICS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"

    # Quadrature
    quadrature_nodes: int = 256

    # Samplers
    rejection_cap: int = 10**9
    rejection_batch: int = 65536

    # Estimators
    sd_grid_size: int = 100_000
    chunk_size: int = 65536

    # Experiment defaults (desk scale)
    default_samples: int = 10**6
    default_features: int = 10**4
    default_directions: int = 10**4
    default_repetitions: int = 10
    workers: int = 1

    # Optional results store (SQLAlchemy URL, empty disables it)
    results_db_url: str = ""

    def validate_sizes(self) -> List[str]:
        """
        Validate the numerical size settings.
        Returns list of error messages for invalid values.
        """
        errors = []
        for name in (
            "quadrature_nodes",
            "rejection_cap",
            "rejection_batch",
            "sd_grid_size",
            "chunk_size",
            "default_samples",
            "default_features",
            "default_directions",
            "default_repetitions",
            "workers",
        ):
            value = getattr(self, name)
            if value < 1:
                errors.append(f"{name.upper()} must be positive. Got: {value}")

        if self.sd_grid_size < 100:
            errors.append(
                f"SD_GRID_SIZE must be at least 100 for the brute-force suprema. Got: {self.sd_grid_size}"
            )
        return errors

    def validate_logging(self) -> List[str]:
        """Validate the log level name."""
        if self.log_level.upper() not in LOG_LEVELS:
            return [f"LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}. Got: {self.log_level}"]
        return []


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def validate_settings(settings: Settings | None = None) -> Settings:
    """
    Validate settings and fail fast.

    Raises:
        ConfigurationError: If any setting is invalid.
    """
    settings = settings or get_settings()
    errors = settings.validate_sizes() + settings.validate_logging()
    if errors:
        error_msg = "Configuration validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
        raise ConfigurationError(error_msg)
    logger.debug(f"Settings validated: {settings.model_dump()}")
    return settings
