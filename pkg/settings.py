# settings.py

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from Spectral.errors import ConfigError

VERSION = "0.4.0"

Mode = Literal[
    "synth",
    "recover",
    "sweep-dyn",
    "sweep-sep",
    "kernel-table",
    "certify",
    "adversarial",
    "probe-concentration",
]
Algorithm = Literal["omp", "sliding_omp", "two_stage_omp"]
Alpha = Literal[1, 2, 4]
Preset = Literal["fig4", "fig6-v0.5", "fig6-v1", "fig6-v1.5", "unit", "random"]


class RuntimeSettings(BaseSettings):
    """Process-level knobs read from the environment or a .env file."""

    model_config = SettingsConfigDict(env_prefix="SUPERRES_", env_file=".env", extra="ignore")

    workers: int = Field(1, ge=1, le=256)
    debug: bool = False
    output_dir: str = "runs"
    show_ui: bool = True


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    mode: Mode = "synth"

    # Instance
    n: int = Field(394, ge=1, le=1 << 16)
    s: int = Field(5, ge=1, le=256)
    placement: Literal["staircase", "random"] = "staircase"
    n_sep: float = Field(1.15, gt=0)
    amplitudes: Preset = "fig4"
    u: float = Field(1.0, ge=1)
    dyn: float = Field(2.0, ge=1)
    p: Optional[float] = Field(None, gt=0, le=1)
    measurements: Optional[int] = Field(180, ge=1)
    exact_count_mask: bool = False
    seeds: List[int] = Field(default_factory=lambda: list(range(10)), min_length=1)
    rng: Literal["philox", "pcg64"] = "philox"

    # Solver
    algorithm: Algorithm = "sliding_omp"
    alpha: Alpha = 4
    gamma: Optional[float] = Field(None, ge=0)
    amplitude_floor: Optional[float] = Field(None, gt=0)
    n_grid: Optional[int] = Field(None, ge=3)
    # null switches sliding to the mask-calibrated step
    eta0: Optional[float] = Field(0.2, gt=0)
    t_slide: int = Field(200, ge=0, le=100_000)
    max_spikes: Optional[int] = Field(None, ge=1)
    cond_limit: float = Field(1e10, gt=1)

    # Sweeps
    algorithms: List[Algorithm] = Field(default_factory=lambda: ["omp", "sliding_omp"], min_length=1)
    alphas: List[Alpha] = Field(default_factory=lambda: [1, 2, 4], min_length=1)
    u_values: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], min_length=1)
    n_sep_values: List[float] = Field(
        default_factory=lambda: [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0], min_length=1
    )
    v_values: List[float] = Field(default_factory=lambda: [0.5, 1.0, 1.5], min_length=1)

    # Kernels
    resolution: int = Field(2001, ge=3, le=10_000_000)
    grid_size: Optional[int] = Field(None, ge=10)

    # Adversarial instance
    c: float = Field(10.0, gt=0)
    L: float = Field(4.0, ge=1)
    c0: Optional[float] = Field(None, gt=0)

    # Concentration probe
    trials: int = Field(50, ge=1, le=100_000)

    # I/O
    input: Optional[str] = None
    out: str = "out"
    workers: Optional[int] = Field(None, ge=1, le=256)
    strict: bool = False

    @model_validator(mode="after")
    def _check_cross_fields(self) -> "ExperimentConfig":
        if self.n_grid is not None and self.n_grid < 2 * self.n + 1:
            raise ValueError(f"n_grid must be at least 2n+1 = {2 * self.n + 1}")
        if self.max_spikes is not None and self.n_grid is not None and self.max_spikes > self.n_grid:
            raise ValueError("max_spikes must not exceed n_grid")
        if any(u < 1 for u in self.u_values):
            raise ValueError("every u in u_values must be >= 1")
        if any(v <= 0 for v in self.n_sep_values):
            raise ValueError("every n_sep in n_sep_values must be positive")
        if any(v not in (0.5, 1.0, 1.5) for v in self.v_values):
            raise ValueError("v_values may only contain 0.5, 1 and 1.5")
        return self

    def config_hash(self) -> str:
        """Stable digest of everything that shapes the data (output location excluded)."""
        payload = self.model_dump(mode="json", exclude={"out", "workers", "strict"})
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8"))
        return digest.hexdigest()[:16]


def load_config(path: Optional[Path], **overrides) -> ExperimentConfig:
    """YAML config (optional) with non-None overrides applied on top."""
    data = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"Could not read config file {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file {path} is not valid YAML: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a mapping at the top level.")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(data)


def validate_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration: {problems}") from e
