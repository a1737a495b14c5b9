"""Configuration management for Clockwork Ticks."""

from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Analysis settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="CLOCKWORK_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Storage
    output_dir: Path = Field(
        default=Path("./clock-output"),
        description="Default directory for reports and stage artifacts",
    )

    # Signal identification
    histogram_bins: int = Field(default=180, ge=10, description="Equidistant histogram bins")
    debounce_k: int = Field(default=3, ge=1, description="Shortest accepted middle-level run")
    fit_max_iterations: int = Field(default=500, ge=1, description="Least-squares iteration cap")
    fit_xtol: float = Field(default=1e-10, gt=0, description="Relative step termination")
    fit_residual_ceiling: float = Field(
        default=0.25,
        gt=0,
        description="Largest accepted RMS residual relative to the histogram peak density",
    )
    peak_min_separation_bins: int = Field(default=3, ge=1, description="Initial peak spacing")

    # Precision
    slices: int = Field(default=300, ge=2, description="Number of slices M")

    # Rate inference
    bootstrap_subsets: int = Field(default=50, ge=2, description="Subsets per subset size")
    bootstrap_min_size: int = Field(default=10, ge=3, description="Smallest subset size")
    bootstrap_max_size: int = Field(default=100, ge=3, description="Largest subset size")
    intrinsic_min_samples: int = Field(default=30, ge=3, description="Dwells needed for eta")
    drift_window_s: float = Field(default=80.0, gt=0, description="Drift window width")
    drift_shift: float = Field(default=0.2, gt=0, le=1, description="Window shift fraction q")
    drift_threshold: float = Field(default=3.0, gt=0, description="Flag threshold in std errors")
    drift_min_dwells: int = Field(default=10, ge=1, description="Expected dwells per window")

    # Ingestion
    sampling_tolerance: float = Field(
        default=0.01,
        gt=0,
        description="Allowed relative deviation of a time step from the median step",
    )

    # Thermodynamics
    temperature_k: float = Field(default=0.180, gt=0, description="Bath temperature")
    rf_gain_chain: float = Field(default=1.0, gt=0, description="rf output conversion factor")

    # Theory
    fd_step: float = Field(
        default=1e-3,
        gt=0,
        description="Tilt step of finite-difference cumulants, in units of the largest weight",
    )

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO",
        description="Logging level",
    )
    log_format: Literal["console", "json"] = Field(
        default="console",
        description="Rendering of structured log events",
    )


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
