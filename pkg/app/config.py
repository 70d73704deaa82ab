"""
Configuration settings for the Hawkes/INAR estimator.

All settings are loaded from environment variables (or a local .env file) so that
batch runs can be tuned without touching code.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application
    APP_NAME: str = "hawkes-inar"
    APP_ENV: str = "development"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Parallelism (replication sweeps, selection candidates)
    WORKERS: int = 1

    # Random sources
    DEFAULT_SEED: int = 42
    RNG_ALGORITHM: str = "PCG64"

    # Hawkes model
    STABILITY_TOL: float = 1e-9
    QUADRATURE_DIVISIONS: int = 10_000

    # Simulation
    THINNING_GRID_POINTS: int = 10_000
    THINNING_SAFETY: float = 1.01
    HAWKES_BURN_IN_FACTOR: float = 10.0
    INAR_BURN_IN_FACTOR: int = 10

    # Estimation
    CONDITION_LIMIT: float = 1e12
    ESTIMABILITY_MARGIN: int = 5
    PSD_SLACK: float = 1e-8
    CI_LEVEL: float = 0.95

    # Diagnostics
    DIAGNOSTICS_LAGS: int = 20
    DIAGNOSTICS_ABS_TOL: float = 1e-6
    DIAGNOSTICS_CHUNK: int = 100

    # Output
    OUTPUT_DIR: str = "out"

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
    )


# Global settings instance
settings = Settings()
