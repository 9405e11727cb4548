from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


CONDITION_LABELS: tuple[str, ...] = ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii")


class ParamSet(BaseModel):
    """Exponents (alpha, p, q, r) of the interval-length family."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0.0, lt=1.0, description="Hölder exponent of the target regularity")
    p: float = Field(..., gt=0.0, description="Exponent on |i|")
    q: float = Field(..., gt=0.0, description="Exponent on |j|")
    r: float = Field(..., gt=0.0, description="Exponent on |k|")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.p, self.q, self.r)


class ParamSpec(BaseModel):
    """Config-file form: explicit exponents or ``{"alpha": .., "auto": true}``."""

    alpha: float = Field(..., gt=0.0, lt=1.0)
    p: float | None = Field(None, gt=0.0)
    q: float | None = Field(None, gt=0.0)
    r: float | None = Field(None, gt=0.0)
    auto: bool = False

    @model_validator(mode="after")
    def check_mode(self) -> "ParamSpec":
        explicit = [self.p, self.q, self.r]
        if self.auto:
            return self
        if any(value is None for value in explicit):
            raise ValueError("p, q and r are required unless auto is set")
        return self


class ConditionReport(BaseModel):
    params: ParamSet
    conditions: dict[str, bool] = Field(..., description="Per-condition outcome keyed i..viii")
    feasible: bool
    slack: dict[str, float] = Field(default_factory=dict, description="rhs - lhs per inequality")

    @field_validator("conditions")
    @classmethod
    def check_labels(cls, value: dict[str, bool]) -> dict[str, bool]:
        if tuple(value.keys()) != CONDITION_LABELS:
            raise ValueError("conditions must be keyed i..viii in order")
        return value
