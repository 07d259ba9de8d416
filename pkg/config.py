"""
Runtime settings for the hand-eye calibration toolkit.
Values come from HANDEYE_* environment variables (optionally a .env file);
none of them is required.
"""

import logging
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, field_validator

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Settings(BaseModel):
    """Numerical thresholds and logging level shared by all modules"""

    log_level: str = "INFO"
    # singular value sigma_k counts as zero when sigma_k / sigma_1 is below this
    rank_tolerance: float = 1e-8
    # minimum angle between two motion axes (rad) for a non-degenerate set
    axis_separation: float = 1e-3
    # largest scalar part tolerated when unrotating a translation block
    translation_scalar_tolerance: float = 1e-8

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level: {value}")
        return level

    @field_validator("rank_tolerance", "axis_separation", "translation_scalar_tolerance")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("Tolerances must be positive")
        return value


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Load settings once per process from the environment"""
    load_dotenv()
    overrides = {}
    env_names = {
        'log_level': 'HANDEYE_LOG_LEVEL',
        'rank_tolerance': 'HANDEYE_RANK_TOL',
        'axis_separation': 'HANDEYE_AXIS_SEPARATION',
        'translation_scalar_tolerance': 'HANDEYE_SCALAR_TOL',
    }
    for field_name, env_name in env_names.items():
        value = os.environ.get(env_name)
        if value:
            overrides[field_name] = value
    settings = Settings(**overrides)
    if overrides:
        logger.debug(f"Settings overridden from environment: {sorted(overrides)}")
    return settings


def configure_logging(level: str = None) -> None:
    """Configure root logging for command-line use"""
    logging.basicConfig(level=level or get_settings().log_level, format=LOG_FORMAT)
