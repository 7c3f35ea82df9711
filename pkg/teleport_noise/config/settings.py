"""Application configuration management."""
from pydantic import Field
from pydantic_settings import BaseSettings

from teleport_noise.utils.exceptions import ConfigurationError


class Settings(BaseSettings):
    """Numerical defaults loaded from environment variables (prefix TELEPORT_NOISE_)."""

    # Logging Configuration
    log_level: str = Field(default="WARNING", description="Console and file log level")
    log_file: str | None = Field(default=None, description="Optional rotating log file")

    # Tolerances
    equality_tol: float = Field(default=1e-12, description="PTM first-row and equality checks")
    imaginary_tol: float = Field(default=1e-12, description="Largest accepted imaginary residue")
    completeness_tol: float = Field(default=1e-10, description="Kraus completeness residue")
    purity_tol: float = Field(default=1e-10, description="Pure Z-coherence gate")

    # Resource Limits
    max_enumeration_steps: int = Field(default=20, description="Brute-force chain oracle cap")
    max_kraus_tuples: int = Field(default=1_000_000, description="Rank>1 conversion tuple cap")
    densesim_max_qubits: int = Field(default=12, description="Dense simulator qubit cap")
    densesim_max_outcome_bits: int = Field(
        default=24, description="Largest enumerated measurement record, in bits"
    )
    densesim_prune_tol: float = Field(default=1e-15, description="Dropped branch weight")
    verify_probability_floor: float = Field(
        default=1e-12, description="Groups below this probability skip the PTM comparison"
    )

    # Sampling Configuration
    default_seed: int = Field(default=20240101, description="Seed used when none is given")
    mc_block_size: int = Field(default=65536, description="Samples per Monte Carlo block")
    max_workers: int = Field(default=1, description="Monte Carlo worker lanes")

    class Config:
        env_prefix = "TELEPORT_NOISE_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False


def resolve_tol(value: float | None, name: str) -> float:
    """Return an explicit tolerance or the configured default named ``name``."""
    if name not in Settings.model_fields:
        raise ConfigurationError(f"unknown setting {name!r}")
    return getattr(settings, name) if value is None else float(value)


# Global settings instance
settings = Settings()
