from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.config import settings
from app.schemas.params import ParamSpec


class HolderOptions(BaseModel):
    generators: list[str] = Field(default_factory=lambda: ["f"])
    alphas: list[float] = Field(default_factory=lambda: [0.4])
    truncations: list[int] = Field(default_factory=lambda: [4, 8])
    grid_points: int = Field(default_factory=lambda: settings.holder_grid_points, ge=2)
    jitter_points: int = Field(default_factory=lambda: settings.holder_jitter_points, ge=0)
    block_points: int = Field(default_factory=lambda: settings.holder_block_points, ge=1)
    profile_radius: int = Field(32, ge=1, description="Rows of the endpoint profile for e, d and f")

    @field_validator("alphas")
    @classmethod
    def check_alphas(cls, value: list[float]) -> list[float]:
        if not value or any(not 0.0 < a < 1.0 for a in value):
            raise ValueError("alphas must lie in (0, 1)")
        return value

    @field_validator("truncations")
    @classmethod
    def check_truncations(cls, value: list[int]) -> list[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("truncations must be >= 1")
        return value


class MarkovOptions(BaseModel):
    dimension: int = Field(3, ge=1)
    alpha: float = Field(0.4, gt=0.0)
    exponents: list[float] | None = Field(None, description="Length exponents; defaults to (p, q, r, r, ...)")
    paths: int = Field(10_000, ge=2)
    horizons: list[int] = Field(default_factory=lambda: list(settings.markov_horizons))

    @field_validator("horizons")
    @classmethod
    def check_horizons(cls, value: list[int]) -> list[int]:
        if not value or any(h < 1 for h in value):
            raise ValueError("horizons must be positive")
        return sorted(set(value))


class ObstructionOptions(BaseModel):
    base: tuple[int, int, int] = (0, 0, 0)
    u: float = Field(0.5, gt=0.0, lt=1.0, description="Relative position of x0 inside I_base")
    horizon: int = Field(64, ge=1)
    lex_radius: int = Field(2, ge=1)
    translation_words: list[str] = Field(default_factory=lambda: ["e", "d", "e^2 d^-1", "c"])
    translation_iterations: int = Field(2, ge=1)


class EvalOptions(BaseModel):
    word: str = "f"
    points: list[float] | None = Field(None, description="Points of [0, 1]; defaults to a uniform grid")
    grid: int = Field(17, ge=1)


class VerifyOptions(BaseModel):
    suites: list[str] = Field(default_factory=lambda: ["group", "lattice", "permutation", "relations", "c1", "pt"])
    group_samples: int = Field(10_000, ge=1)
    lattice_samples: int = Field(100_000, ge=1)
    pt_samples: int = Field(1000, ge=1)
    inject_fault: bool = False


class OutputOptions(BaseModel):
    json_path: Path | None = None
    csv_path: Path | None = None


class RunConfig(BaseModel):
    """Resolved run configuration; embedded verbatim in every report."""

    model_config = ConfigDict(extra="forbid")

    params: ParamSpec = Field(default_factory=lambda: ParamSpec(alpha=settings.default_alpha, auto=True))
    truncation: int = Field(default_factory=lambda: settings.default_truncation, ge=1)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0)
    output: OutputOptions = Field(default_factory=OutputOptions)
    holder: HolderOptions = Field(default_factory=HolderOptions)
    markov: MarkovOptions = Field(default_factory=MarkovOptions)
    obstruction: ObstructionOptions = Field(default_factory=ObstructionOptions)
    eval: EvalOptions = Field(default_factory=EvalOptions)
    verify: VerifyOptions = Field(default_factory=VerifyOptions)
