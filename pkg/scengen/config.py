"""
Configuration for scengen.

Environment settings come from variables / .env via pydantic-settings.
Run parameters come from a flat key=value file (read with python-dotenv)
whose `ae_`, `gen_` and `eval_` prefixed keys fill the nested sections.
Precedence: defaults < file < explicit overrides (CLI flags).
"""

import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError

logger = logging.getLogger(__name__)

SECTION_PREFIXES = {"ae_": "ae", "gen_": "gen", "eval_": "eval"}

Architecture = Literal["tconv1", "tconv2", "tconv3", "dense1", "dense2", "dense3"]
OptimizerName = Literal["sgd", "adagrad", "rmsprop", "adadelta", "adam", "adamax", "nadam"]


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables."""

    log_level: str = Field(default="INFO", alias="LOG_LEVEL")

    # Default run-config file used when no --config is given
    config_path: Optional[str] = Field(default=None, alias="SCENGEN_CONFIG")

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


class AutoEncoderConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: PositiveInt = 500
    batch_size: PositiveInt = 32
    lr: float = Field(default=0.001, gt=0.0, le=0.01)
    latent_dim: PositiveInt = 16


class GeneratorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: PositiveInt = 500
    batch_size: PositiveInt = 32
    lr: float = Field(default=0.001, gt=0.0, le=0.01)
    noise_dim: PositiveInt = 100
    bandwidth: Union[Literal["auto"], PositiveFloat] = "auto"
    architecture: Architecture = "tconv3"
    optimizer: OptimizerName = "adam"
    # Weight of the reconstruction-consistency term; 0 trains on latent MMD alone
    consistency: float = Field(default=1.0, ge=0.0)

    @property
    def fixed_bandwidth(self) -> Optional[float]:
        """The configured bandwidth, or None for the median heuristic."""
        return None if self.bandwidth == "auto" else float(self.bandwidth)


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bins: PositiveInt = 50
    max_lag: int = Field(default=23, ge=0, le=23)
    match_count: int = Field(default=5, ge=0)


class RunConfig(BaseModel):
    """All parameters of one train/generate/evaluate run."""
    model_config = ConfigDict(extra="forbid")

    data_path: Optional[Path] = None
    seed: int = Field(default=0, ge=0)
    split_fraction: float = Field(default=0.8, gt=0.0, lt=1.0)
    output_dir: Path = Path("runs/latest")
    log_every: PositiveInt = 50
    ae: AutoEncoderConfig = Field(default_factory=AutoEncoderConfig)
    gen: GeneratorConfig = Field(default_factory=GeneratorConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    def to_flat(self) -> dict[str, Any]:
        """Inverse of the flat key=value layout, for logging and archive metadata."""
        flat = {
            "data_path": str(self.data_path) if self.data_path else None,
            "seed": self.seed,
            "split_fraction": self.split_fraction,
            "output_dir": str(self.output_dir),
            "log_every": self.log_every,
        }
        for prefix, section in SECTION_PREFIXES.items():
            for key, value in getattr(self, section).model_dump().items():
                flat[f"{prefix}{key}"] = value
        return flat


def _nest(flat: dict[str, Any], source: str) -> dict[str, Any]:
    nested: dict[str, Any] = {section: {} for section in SECTION_PREFIXES.values()}
    top_level = set(RunConfig.model_fields) - set(SECTION_PREFIXES.values())

    for raw_key, value in flat.items():
        key = raw_key.strip().lower()
        if value is None or value == "":
            continue
        section = next((s for p, s in SECTION_PREFIXES.items() if key.startswith(p)), None)
        if section is not None:
            field_name = key.split("_", 1)[1]
            if field_name not in RunConfig.model_fields[section].annotation.model_fields:
                raise ConfigError(f"Unknown config key '{raw_key}' in {source}")
            nested[section][field_name] = value
        elif key in top_level:
            nested[key] = value
        else:
            raise ConfigError(f"Unknown config key '{raw_key}' in {source}")
    return nested


def _merge(base: dict[str, Any], extra: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict):
            merged[key] = {**merged.get(key, {}), **value}
        else:
            merged[key] = value
    return merged


def load_run_config(
    path: Optional[Union[str, os.PathLike]] = None,
    overrides: Optional[dict[str, Any]] = None
) -> RunConfig:
    """
    Build a validated RunConfig.

    Args:
        path: Flat key=value file; falls back to SCENGEN_CONFIG when None
        overrides: Flat keys (same names as the file) from the command line;
            None values are ignored

    Raises:
        ConfigError: missing file, unknown key or failed validation
    """
    if path is None:
        path = get_settings().config_path

    values: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        values = _nest(dotenv_values(path), str(path))
        logger.info(f"Loaded run config from {path}")

    if overrides:
        values = _merge(values, _nest(overrides, "command-line flags"))

    try:
        return RunConfig(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid run configuration: {problems}") from e
