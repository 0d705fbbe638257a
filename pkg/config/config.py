"""
Configuration module for the application.

This module contains the environment-driven numerical defaults, the Pydantic
models describing one experiment (domain, data source, kernel, confidence
budget, weights, outputs) and the Pydantic models of the JSON report and the
validation summary.
"""

import math
import os
from typing import Dict, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, model_validator

load_dotenv()


# =============================================================================
# Logging Configuration
# =============================================================================

# Root directory of the per-day log folders
MORSE_LOG_DIR: str = os.getenv("MORSE_LOG_DIR", "logs")

# Console threshold; the log file always records DEBUG
MORSE_CONSOLE_LOG_LEVEL: str = os.getenv("MORSE_CONSOLE_LOG_LEVEL", "WARNING")


# =============================================================================
# Numerical Defaults
# =============================================================================

# Diagonal jitter added to every correlation matrix
MORSE_DEFAULT_JITTER: float = float(os.getenv("MORSE_DEFAULT_JITTER", "1e-10"))

# Total failure probability (confidence level is 1 - delta)
MORSE_DEFAULT_DELTA: float = float(os.getenv("MORSE_DEFAULT_DELTA", "0.05"))

# Lipschitz constant used for the ray construction
MORSE_DEFAULT_LIPSCHITZ: float = float(os.getenv("MORSE_DEFAULT_LIPSCHITZ", "8.0"))

# Points of the log-spaced coarse scan that brackets the likelihood minimum
MORSE_THETA_GRID_POINTS: int = int(os.getenv("MORSE_THETA_GRID_POINTS", "64"))

# Largest grid sampled by a direct Cholesky factorization; larger grids go
# through the anchor subgrid
MORSE_MAX_DIRECT_SAMPLING_GRID: int = int(os.getenv("MORSE_MAX_DIRECT_SAMPLING_GRID", "2049"))

# Posterior paths drawn per batch during validation
MORSE_PATH_BATCH_SIZE: int = int(os.getenv("MORSE_PATH_BATCH_SIZE", "250"))

# Exhaustive attractor enumeration is refused above this many cells
MORSE_ENUMERATION_CELL_LIMIT: int = int(os.getenv("MORSE_ENUMERATION_CELL_LIMIT", "18"))

# Relative pairs up to this many chains are re-checked with dense Z5 ranks
MORSE_DENSE_HOMOLOGY_CHECK_LIMIT: int = int(os.getenv("MORSE_DENSE_HOMOLOGY_CHECK_LIMIT", "400"))

# Bumped whenever a report field changes meaning
REPORT_SCHEMA_VERSION: str = "1.0"


# =============================================================================
# Pydantic Models: Experiment Configuration
# =============================================================================

class Domain(BaseModel):
    """The compact interval X = [lower, upper]."""
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float

    @model_validator(mode="after")
    def _check_bounds(self) -> "Domain":
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("domain bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError(f"domain lower bound {self.lower} must be below upper bound {self.upper}")
        return self

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


_SYNTHETIC_PARAMETERS: Dict[str, Tuple[str, ...]] = {
    "logistic": ("r",),
    "arctan_sigmoid": ("a", "b", "c", "s"),
    "gauss_bump": ("h", "w", "c"),
    "table": (),
}


class SyntheticSpec(BaseModel):
    """
    Ground-truth map plus sampling recipe for synthetic training data.

    Kinds and their parameters:
        logistic:        r            y = r x (1 - x)
        arctan_sigmoid:  a, b, c, s   y = a arctan(b x - c) + s
        gauss_bump:      h, w, c      y = h exp(-w (x - c)^2)
        table:           knots        piecewise-linear through (x, y) knots
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["logistic", "arctan_sigmoid", "gauss_bump", "table"]
    params: Dict[str, float] = Field(default_factory=dict)
    knots: Optional[List[Tuple[float, float]]] = None
    n_samples: int = Field(ge=2)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_parameters(self) -> "SyntheticSpec":
        missing = [name for name in _SYNTHETIC_PARAMETERS[self.kind] if name not in self.params]
        if missing:
            raise ValueError(f"{self.kind} requires parameters {missing}")
        for name, value in self.params.items():
            if not math.isfinite(value):
                raise ValueError(f"parameter {name} must be finite")
        if self.kind == "table":
            if not self.knots or len(self.knots) < 2:
                raise ValueError("table requires at least two knots")
            xs = [k[0] for k in self.knots]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("table knots must have strictly increasing x")
            if not all(math.isfinite(v) for knot in self.knots for v in knot):
                raise ValueError("table knots must be finite")
        return self


class KernelConfig(BaseModel):
    """Squared-exponential kernel exp(-(x - x')^2 / theta) and its MLE search."""
    model_config = ConfigDict(frozen=True)

    theta: float = Field(default=0.1, gt=0)
    theta_search_bounds: Optional[Tuple[float, float]] = None  # None: scaled to the domain
    jitter: float = Field(default=MORSE_DEFAULT_JITTER, ge=0, le=1e-6)
    optimize: bool = True  # False: hold theta fixed
    grid_points: int = Field(default=MORSE_THETA_GRID_POINTS, ge=3)

    @model_validator(mode="after")
    def _check_bounds(self) -> "KernelConfig":
        if self.theta_search_bounds is not None:
            lo, hi = self.theta_search_bounds
            if not 0 < lo < hi:
                raise ValueError("theta_search_bounds must be positive and ordered")
            if hi < 100.0 * lo * (1.0 - 1e-12):
                raise ValueError("theta_search_bounds must span at least two orders of magnitude")
        return self

    def bounds_for(self, domain: Domain) -> Tuple[float, float]:
        """Return the search bounds, defaulting to [1e-4, 1e2] times the squared width."""
        if self.theta_search_bounds is not None:
            return self.theta_search_bounds
        return 1e-4 * domain.width ** 2, 1e2 * domain.width ** 2


class ConfidenceBudget(BaseModel):
    """
    Split of the confidence level 1 - delta between the Lipschitz assumption
    and the pointwise bands. Both shares default to sqrt(1 - delta).
    """
    model_config = ConfigDict(frozen=True)

    delta_total: float = Field(gt=0, lt=1)
    lipschitz_share: Optional[float] = None
    pointwise_share: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def _fill_shares(cls, values):
        if not isinstance(values, dict):
            return values
        values = dict(values)
        delta = values.get("delta_total")
        if delta is None or not 0 < delta < 1:
            return values
        lip, point = values.get("lipschitz_share"), values.get("pointwise_share")
        if lip is None and point is None:
            lip = point = math.sqrt(1.0 - delta)
        elif lip is None:
            lip = (1.0 - delta) / point
        elif point is None:
            point = (1.0 - delta) / lip
        values["lipschitz_share"], values["pointwise_share"] = lip, point
        return values

    @model_validator(mode="after")
    def _check_shares(self) -> "ConfidenceBudget":
        for name in ("lipschitz_share", "pointwise_share"):
            share = getattr(self, name)
            if share is None or not 0 < share < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if abs(self.lipschitz_share * self.pointwise_share - (1.0 - self.delta_total)) > 1e-12:
            raise ValueError("lipschitz_share * pointwise_share must equal 1 - delta_total")
        return self


class LipschitzAssumption(BaseModel):
    """The user-supplied Lipschitz bound and the confidence it is assumed to hold with."""
    model_config = ConfigDict(frozen=True)

    L: float = Field(gt=0)
    assumed_confidence: float = Field(gt=0, lt=1)


class WeightRegion(BaseModel):
    """Failure-budget weight for the midpoints inside [lower, upper]."""
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float
    weight: float = Field(gt=0)


class ConfidenceWeights(BaseModel):
    """
    How the failure budget is spread over the odd-edge midpoints.

    uniform:         pointwise equal confidence
    regions:         weights from `regions`, `default_weight` elsewhere
    refine_minimal:  uniform pass, then a second pass giving `inner_weight`
                     to midpoints over the minimal Morse supports
    """
    model_config = ConfigDict(frozen=True)

    mode: Literal["uniform", "regions", "refine_minimal"] = "uniform"
    regions: List[WeightRegion] = Field(default_factory=list)
    default_weight: float = Field(default=1.0, gt=0)
    inner_weight: float = Field(default=8.0, gt=0)


class DataSource(BaseModel):
    """Exactly one of a CSV path or a synthetic specification."""
    model_config = ConfigDict(frozen=True)

    csv: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None

    @model_validator(mode="after")
    def _exactly_one(self) -> "DataSource":
        if (self.csv is None) == (self.synthetic is None):
            raise ValueError("data source needs exactly one of 'csv' or 'synthetic'")
        return self


class OutputPaths(BaseModel):
    model_config = ConfigDict(frozen=True)

    report: Optional[str] = None
    svg: Optional[str] = None


class AnalysisConfig(BaseModel):
    """One experiment: everything `analyze` and `validate` need."""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: str = "analysis"
    domain: Domain
    grid_exponent: int = Field(alias="B", ge=2, le=20)
    delta_total: float = Field(default=MORSE_DEFAULT_DELTA, gt=0, lt=1)
    lipschitz_share: Optional[float] = None
    pointwise_share: Optional[float] = None
    L: float = Field(default=MORSE_DEFAULT_LIPSCHITZ, gt=0)
    kernel: KernelConfig = Field(default_factory=KernelConfig)
    data: DataSource
    weights: ConfidenceWeights = Field(default_factory=ConfidenceWeights)
    output: OutputPaths = Field(default_factory=OutputPaths)
    seed: Optional[int] = Field(default=None, ge=0)  # overrides the synthetic seed
    report_timings: bool = False

    @model_validator(mode="after")
    def _check_budget(self) -> "AnalysisConfig":
        self.budget()
        return self

    def budget(self) -> ConfidenceBudget:
        return ConfidenceBudget(
            delta_total=self.delta_total,
            lipschitz_share=self.lipschitz_share,
            pointwise_share=self.pointwise_share,
        )

    def lipschitz(self) -> LipschitzAssumption:
        return LipschitzAssumption(L=self.L, assumed_confidence=self.budget().lipschitz_share)

    def synthetic_spec(self) -> Optional[SyntheticSpec]:
        """The synthetic spec with the master seed applied, or None for CSV data."""
        spec = self.data.synthetic
        if spec is None or self.seed is None:
            return spec
        return spec.model_copy(update={"seed": self.seed})

    def master_seed(self) -> int:
        if self.seed is not None:
            return self.seed
        if self.data.synthetic is not None:
            return self.data.synthetic.seed
        return 0


# =============================================================================
# Pydantic Models: Report
# =============================================================================

class ModelSummary(BaseModel):
    """Fitted surrogate parameters."""
    beta_hat: float
    sigma2_hat: float
    theta_hat: float
    n_samples: int
    degenerate: bool = False


class DiagnosticsSummary(BaseModel):
    """Enclosure diagnostics and the runtime bound checks."""
    max_fiber_diameter: float
    ell: float
    epsilon: float
    fiber_diameter_bound: float
    fiber_diameter_bound_holds: bool
    gamma: float
    variance_bound: float
    max_posterior_sd: float
    variance_bound_holds: bool
    required_L: float
    g_tilde_contained: bool
    clipped_edges: int
    interpolation_residual: float = 0.0  # max |mu(x_i) - y_i| over the data
    interpolation_ok: bool = True


class MorseNodeSummary(BaseModel):
    label: str
    cell_count: int
    intervals: List[Tuple[float, float]]
    intervals_text: str  # 8-decimal rendering
    minimal: bool
    below: List[str]  # labels of the nodes strictly below


class MorseGraphSummary(BaseModel):
    nodes: List[MorseNodeSummary]
    hasse: List[Tuple[str, str]]  # (upper, lower) covering pairs


class ConleySummary(BaseModel):
    """Conley index of one Morse node; matrices hold entries lifted to -2..2."""
    label: str
    p0: str
    p1: str
    classification: str
    period: Optional[int] = None
    core_dims: List[int]
    invariant_factors: Dict[str, List[str]]
    matrices: Dict[str, List[List[int]]]


class ConnectionSummary(BaseModel):
    upper: str
    lower: str
    connecting_orbit: bool
    combined_p0: str
    combined_p1: str


class Report(BaseModel):
    """Everything one `analyze` run produces."""
    schema_version: str = REPORT_SCHEMA_VERSION
    config: AnalysisConfig
    budget: ConfidenceBudget
    lipschitz: LipschitzAssumption
    model: ModelSummary
    diagnostics: DiagnosticsSummary
    confidence_valid: bool
    refinement_passes: int = 1
    morse_graph: MorseGraphSummary
    conley: List[ConleySummary]
    connections: List[ConnectionSummary]
    timings: Optional[Dict[str, float]] = None


# =============================================================================
# Pydantic Models: Validation Summary
# =============================================================================

class TrialSummary(BaseModel):
    trial: int
    seed: int
    confidence_valid: Optional[bool] = None
    posterior_coverage: Optional[float] = None  # fraction of paths inside G~
    truth_inside: Optional[bool] = None  # None in posterior-only mode
    max_fiber_diameter: Optional[float] = None
    error: Optional[str] = None


class ValidationSummary(BaseModel):
    config: AnalysisConfig
    trials: int
    paths_per_trial: int
    grid_points: int
    mean_posterior_coverage: Optional[float]
    truth_coverage_frequency: Optional[float]
    confidence_valid_count: int
    failed_trials: int
    per_trial: List[TrialSummary]
