from typing import Any

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict  # type: ignore[import-not-found]


class Settings(BaseSettings):
    app_env: str = "local"
    app_name: str = "nilflow"
    log_level: str = "INFO"

    # Parallelism cap for sweeps and Monte Carlo batches (NILFLOW_THREADS)
    threads: int = 4

    default_alpha: float = 0.4
    default_truncation: int = 6
    default_seed: int = 20240611

    # Chart profile
    chart_pole_order: float = 2.0
    chart_panels: int = 64
    chart_gauss_order: int = 16
    chart_cache_quantum: float = 1e-12
    chart_newton_max_iter: int = 60

    # Feasibility tolerances
    condition_tolerance: float = 1e-12
    strict_margin: float = 1e-9
    feasibility_grid_points: int = 64

    # Hölder sampling plan defaults
    holder_grid_points: int = 9
    holder_jitter_points: int = 4
    holder_block_points: int = 3

    markov_batch_paths: int = 2048
    markov_horizons: list[int] = [1_000, 10_000, 100_000]

    @field_validator("markov_horizons", mode="before")
    @classmethod
    def parse_horizons(cls, v: Any) -> list[int]:
        if isinstance(v, str):
            return [int(part.strip()) for part in v.split(",") if part.strip()]
        if isinstance(v, (list, tuple)):
            return [int(part) for part in v]
        return [1_000, 10_000, 100_000]

    @field_validator("threads", mode="before")
    @classmethod
    def clamp_threads(cls, v: Any) -> int:
        try:
            value = int(v)
        except (TypeError, ValueError):
            return 1
        return max(1, value)

    model_config = SettingsConfigDict(env_file=".env", env_prefix="NILFLOW_", case_sensitive=False)


settings = Settings()
