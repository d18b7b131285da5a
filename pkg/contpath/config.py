"""
contpath - Configuration Management
Environment settings, numerical tolerances and policy defaults
"""

import logging
from typing import Optional

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "contpath"
    VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    # Execution
    THREADS: int = 1
    DETERMINISTIC: bool = True

    # Numerical tolerances
    DUAL_FEASIBILITY_TOL: float = 1e-10
    GAP_CLAMP_TOL: float = 1e-10
    SCREENING_MARGIN: float = 1e-10
    LAMBDA_SNAP_TOL: float = 1e-12

    # Path policies
    DEFAULT_R_FACTOR: float = 0.42
    DEFAULT_EPS_FACTOR: float = 0.42
    LAMBDA_CLIP_RATIO: float = 1e-3
    EPS_CLIP_RATIO: float = 1e-8
    EPS_HALVING_MAX: int = 40
    GEOMETRIC_DEFAULT_T: int = 100
    REFINE_MIN_GAP: float = 0.1
    SATURATION_C: float = 1.0
    SIZE_CONTROL_RETRIES: int = 6
    SIZE_CONTROL_TIGHTEN: float = 10.0
    MAX_PATH_STEPS: int = 1000
    WORKING_SET_MAX_RETRIES: int = 5

    # Inner solvers
    GAP_CHECK_EVERY: int = 10
    MAX_EPOCHS: int = 10000
    POWER_ITER_MAX: int = 100
    POWER_ITER_TOL: float = 1e-6
    POWER_ITER_SEED: int = 0

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="CONTPATH_",
        case_sensitive=True,
        extra="ignore",
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        level = v.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown LOG_LEVEL: {v}")
        return level

    @field_validator("THREADS", "MAX_EPOCHS", "GAP_CHECK_EVERY", "MAX_PATH_STEPS")
    @classmethod
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("DEFAULT_R_FACTOR", "DEFAULT_EPS_FACTOR")
    @classmethod
    def validate_unit_factor(cls, v):
        if not 0 < v < 1:
            raise ValueError("policy factors must lie in (0, 1)")
        return v


# Global settings instance
settings = Settings()

# Default parameters per policy variant (keyed by PolicyVariant value)
POLICY_DEFAULTS = {
    "fastpath": {"r": settings.DEFAULT_R_FACTOR},
    "simplified": {"r": settings.DEFAULT_R_FACTOR},
    "adaptive": {"c": 1.0},
    "geometric": {"T": settings.GEOMETRIC_DEFAULT_T},
    "prescribed": {"refine": None},
    "active": {"schedule": "lars"},
}

# CLI exit codes
EXIT_CODES = {
    "success": 0,
    "usage": 1,
    "failure": 1,
    "budget": 2,
}
