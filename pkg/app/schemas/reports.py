from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class HomomorphismReport(BaseModel):
    convention: str
    samples: int
    violations: int
    examples: list[str] = Field(default_factory=list, description="First few violating samples")


class OrderReport(BaseModel):
    convention: str
    samples: int
    violations: int
    examples: list[str] = Field(default_factory=list)


class LayoutSummary(BaseModel):
    alpha: float
    p: float
    q: float
    r: float
    truncation: int
    interval_count: int
    total_raw_mass: float = Field(..., description="Sum of raw lengths over the box")
    normalized_mass_error: float = Field(..., description="|sum of normalized lengths - 1|")


class RegularityReport(BaseModel):
    samples: int
    m_estimate: float = Field(..., description="sup |D log Dphi| * |I| / |rho - 1| over samples")
    affine_max: float = Field(..., description="sup |D log Dphi| over samples with rho == 1")
    worst_quadruple: list[float] = Field(default_factory=list)


class C1Report(BaseModel):
    generators: list[str]
    endpoints_checked: int
    max_mismatch: float = Field(..., description="max |log(right derivative / left derivative)|")
    max_limit_mismatch: float = Field(
        0.0, description="max gap of interior log-derivatives just inside each side of the endpoint"
    )
    max_closed_form_gap: float = Field(
        0.0, description="max gap between those interior values and the closed-form endpoint derivatives"
    )
    worst: str | None = None


class PermutationReport(BaseModel):
    checked: int
    mismatches: int
    examples: list[str] = Field(default_factory=list)


class HolderArgmax(BaseModel):
    x: float
    y: float
    index_x: list[int]
    u_x: float
    index_y: list[int]
    u_y: float


class HolderReport(BaseModel):
    generator: str
    alpha: float
    truncation: int
    samples: int = Field(..., description="Number of point pairs compared")
    constant: float = Field(..., ge=0.0)
    argmax: HolderArgmax | None = None
    strata: dict[str, float] = Field(default_factory=dict, description="Max quotient per stratum")
    regimes: dict[str, float] = Field(default_factory=dict, description="Cross-interval maxima per k-regime")


class EndpointProfileRow(BaseModel):
    index: int
    log_derivative: float
    distance: float
    quotient: float


class EndpointProfileReport(BaseModel):
    generator: str
    alpha: float
    threshold: float = Field(
        ...,
        description="r / (p (r - 1)) for e, r / (q (r - 1)) for d, r (P - 2r) / (P (r - 1)) for f with P = max(p, q)",
    )
    growth_exponent: float = Field(..., description="Predicted slope of log quotient against log b")
    observed_exponent: float | None = Field(None, description="Least-squares slope over the upper half of the rows")
    rows: list[EndpointProfileRow]

    @property
    def expected_bounded(self) -> bool:
        return self.growth_exponent <= 1e-9

    def sup_up_to(self, radius: int) -> float:
        return max(row.quotient for row in self.rows if row.index <= radius)

    def exponent_agrees(self, tolerance: float = 0.1) -> bool:
        if self.observed_exponent is None:
            return True
        return abs(self.observed_exponent - self.growth_exponent) <= tolerance


class BoundReport(BaseModel):
    name: str
    truncation: int
    value: float
    argmax: list[float] = Field(default_factory=list)


class RegimeBoundReport(BaseModel):
    truncation: int
    alpha: float
    regimes: dict[str, float]


class SecondIncrementReport(BaseModel):
    truncation: int
    samples: int
    worst_slack: float = Field(..., description="min over samples of bound - |increment|")
    violations: int


class MonomialBoundRow(BaseModel):
    exponents: list[float] = Field(..., description="(a1, a2, a3, b)")
    value: float
    argmax: list[int]


class MonomialBoundReport(BaseModel):
    truncation: int
    rows: list[MonomialBoundRow]


class MarkovHorizon(BaseModel):
    horizon: int
    mean: float
    std_error: float
    band: tuple[float, float]


class MarkovReport(BaseModel):
    dimension: int
    alpha: float
    paths: int
    seed: int
    horizons: list[MarkovHorizon]
    deltas: list[float] = Field(default_factory=list, description="Relative change between successive horizons")
    cauchy: bool


class JIntervalModel(BaseModel):
    word: str
    base_index: list[int]
    base_u: float
    inf: float
    sup: float
    orbit_size: int
    left_truncated: bool
    right_truncated: bool


class CertificateReport(BaseModel):
    base_index: list[int]
    conditions: dict[str, bool]
    passed: bool
    j_intervals: list[JIntervalModel] = Field(default_factory=list)


class LexFamilyReport(BaseModel):
    base_index: list[int]
    radius: int
    checked: int
    disjoint: bool
    lex_ordered: bool
    shifts: bool
    passed: bool


class TranslationReport(BaseModel):
    word: str
    iterations: int
    displacement: list[int]
    numbers: list[float] = Field(..., description="Per-direction displacement / iterations for (i, j, k)")


class HeisenbergRow(BaseModel):
    triple: list[str]
    applicable: bool
    moved_by: list[str]
    passed: bool


class HeisenbergReport(BaseModel):
    base_index: list[int]
    rows: list[HeisenbergRow]
    passed: bool


class SuiteResult(BaseModel):
    name: str
    passed: bool
    metrics: dict[str, float | int | str] = Field(default_factory=dict)
    failures: list[str] = Field(default_factory=list)


class RunReport(BaseModel):
    """Envelope written by every CLI subcommand."""

    command: str
    config: dict[str, Any]
    params: dict[str, float] | None = Field(None, description="Resolved exponents (alpha, p, q, r)")
    chart_hash: str
    passed: bool | None = None
    payload: dict[str, Any] = Field(default_factory=dict)
