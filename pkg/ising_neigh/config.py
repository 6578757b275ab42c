"""Validated configuration objects and environment settings."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from ising_neigh.errors import InputError

DEFAULT_DELTA = 10.0
DEFAULT_KAPPA = 1.0
DEFAULT_KEPT_CAP = 10
DEFAULT_MAX_CARD = 8
DEFAULT_EXACT_CAP = 20
DEFAULT_BURN_IN = 1000
DEFAULT_THINNING = 100
DEFAULT_CUT = "inverse:0.3"
DEFAULT_SAMPLE_SIZES = (500, 1000, 2000, 5000, 10000)
DEFAULT_REPLICAS = 20

SCENARIOS = (
    "fig2_variance",
    "fig3_riskratio",
    "fig4_on_discovery",
    "fig5_ini_discovery",
    "fig6_oracle_vs_truth",
    "fig7_8_select_cut",
    "fig9_efficient",
    "variance_coverage",
    "reduction_sandwich",
)


def default_c_grid(
    points: int = 50, low: float = 0.01, high: float = 10.0
) -> List[float]:
    """Geometric grid of penalty constants used by the slope heuristic."""
    return [float(c) for c in np.geomspace(low, high, points)]


def parse_c_grid(text: str) -> List[float]:
    """Parse ``low:high:points`` (geometric) or a comma separated list of constants."""
    text = text.strip()
    try:
        if ":" in text:
            low, high, points = text.split(":")
            grid = default_c_grid(int(points), float(low), float(high))
        else:
            grid = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise InputError(f"Invalid C grid '{text}': {e}") from e
    _check_grid(grid)
    return grid


def _check_grid(grid: List[float]) -> None:
    if len(grid) < 2:
        raise InputError("C grid must contain at least two constants")
    if any(c <= 0 for c in grid):
        raise InputError("C grid constants must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("C grid must be strictly increasing")


class SamplerConfig(BaseModel):
    """Seed and chain parameters of a sampler run."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(0, ge=0, lt=2**64)
    burn_in: int = Field(DEFAULT_BURN_IN, ge=0)
    thinning: int = Field(DEFAULT_THINNING, ge=1)
    exact_cap: int = Field(DEFAULT_EXACT_CAP, ge=1, le=26)
    scan: Literal["random", "systematic"] = "random"

    def with_seed(self, seed: int) -> "SamplerConfig":
        return self.model_copy(update={"seed": seed})


class CutSpec(BaseModel):
    """Threshold rule of the cutting step."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["sqrt", "inverse"] = "inverse"
    c: float = Field(0.3, ge=0)
    delta: float = DEFAULT_DELTA

    @field_validator("delta")
    @classmethod
    def _delta_above_one(cls, value: float) -> float:
        if not value > 1:
            raise ValueError("delta must be > 1")
        return value

    @classmethod
    def parse(cls, text: str, delta: float = DEFAULT_DELTA) -> "CutSpec":
        """Parse the ``kind:c`` command line form, e.g. ``inverse:0.3``."""
        kind, _, value = text.partition(":")
        try:
            return cls(kind=kind.strip(), c=float(value) if value else 0.3, delta=delta)
        except (ValidationError, ValueError) as e:
            raise InputError(f"Invalid cut spec '{text}': {e}") from e


class ExperimentConfig(BaseModel):
    """Declarative description of one simulation scenario."""

    scenario: Literal[SCENARIOS]  # type: ignore[valid-type]
    model: str = "grid3x3"
    site: Optional[int] = None
    sample_sizes: List[int] = Field(default_factory=lambda: list(DEFAULT_SAMPLE_SIZES))
    replicas: int = Field(DEFAULT_REPLICAS, ge=1)
    seed: int = Field(0, ge=0)
    c_grid: Union[str, List[float]] = "0.01:10:50"
    measures: List[Literal["dimension", "variance"]] = Field(
        default_factory=lambda: ["dimension", "variance"]
    )
    cut: str = DEFAULT_CUT
    delta: float = DEFAULT_DELTA
    kappa: float = Field(DEFAULT_KAPPA, gt=0)
    kept_cap: int = Field(DEFAULT_KEPT_CAP, ge=0)
    kept_target: Optional[int] = Field(None, ge=0)
    max_card: int = Field(DEFAULT_MAX_CARD, ge=0)
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)

    @field_validator("sample_sizes")
    @classmethod
    def _sizes_increasing(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("sample_sizes must not be empty")
        if any(n <= 0 for n in value):
            raise ValueError("sample sizes must be positive")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("sample sizes must be strictly increasing")
        return value

    @field_validator("delta")
    @classmethod
    def _delta_above_one(cls, value: float) -> float:
        if not value > 1:
            raise ValueError("delta must be > 1")
        return value

    @model_validator(mode="after")
    def _grid_parses(self) -> "ExperimentConfig":
        self.grid()
        CutSpec.parse(self.cut, self.delta)
        return self

    def grid(self) -> List[float]:
        if isinstance(self.c_grid, str):
            return parse_c_grid(self.c_grid)
        _check_grid(list(self.c_grid))
        return list(self.c_grid)

    def cut_spec(self) -> CutSpec:
        return CutSpec.parse(self.cut, self.delta)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise InputError(f"Cannot read experiment config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise InputError(f"Experiment config {path} is not valid JSON: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise InputError(f"Invalid experiment config: {e}") from e


class Settings(BaseModel):
    """Process-level settings read from ``ISING_NEIGH_*`` environment variables."""

    threads: int = Field(1, ge=1)
    log_level: str = "WARNING"
    allowed_origins: List[str] = Field(default_factory=list)

    @classmethod
    def from_env(cls) -> "Settings":
        origins = os.environ.get("ISING_NEIGH_ALLOWED_ORIGINS", "")
        try:
            return cls(
                threads=int(os.environ.get("ISING_NEIGH_THREADS", "1")),
                log_level=os.environ.get("ISING_NEIGH_LOG_LEVEL", "WARNING").upper(),
                allowed_origins=[o.strip() for o in origins.split(",") if o.strip()],
            )
        except (ValidationError, ValueError) as e:
            raise InputError(f"Invalid ISING_NEIGH_* environment setting: {e}") from e
