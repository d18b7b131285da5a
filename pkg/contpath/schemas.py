"""
contpath - Pydantic Schemas
Validated run configuration (policies, solvers, datasets) and trace documents
"""

from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import POLICY_DEFAULTS, settings
from .models import (
    Command,
    DatasetSource,
    PolicyVariant,
    SizeMode,
    SolverMethod,
    TerminationReason,
    WorkingSetOrigin,
)


# ===============================
# Path policies
# ===============================


class SizeSchedule(BaseModel):
    """Target safe active-set sizes p_t for size-controlled paths"""

    mode: SizeMode = SizeMode.LARS
    k: int = Field(1, ge=1)
    targets: List[int] = Field(default_factory=list)
    cap: Optional[int] = Field(None, ge=1)

    @field_validator("targets")
    @classmethod
    def validate_targets(cls, v):
        if any(t < 1 for t in v):
            raise ValueError("size targets must be positive")
        if any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("size targets must be non-decreasing")
        return v

    @model_validator(mode="after")
    def validate_mode(self):
        if self.mode == SizeMode.TARGETS and not self.targets:
            raise ValueError("targets mode needs at least one target size")
        return self

    @classmethod
    def parse(cls, text: str) -> "SizeSchedule":
        """Parse "fixed:k", "targets:p1,p2,..." or "lars"."""
        text = text.strip().lower()
        if text == "lars":
            return cls(mode=SizeMode.LARS)
        kind, _, value = text.partition(":")
        if kind == "fixed" and value:
            return cls(mode=SizeMode.FIXED, k=int(value))
        if kind == "targets" and value:
            return cls(
                mode=SizeMode.TARGETS,
                targets=[int(v) for v in value.split(",") if v.strip()],
            )
        raise ValueError(
            f"Invalid size schedule '{text}', expected fixed:k, targets:p1,p2,... or lars"
        )

    def next_target(self, current_size: int, p: int) -> int:
        """Next size target given the current safe active-set size.

        A return value >= p (or not above current_size once the cap is hit)
        means the schedule is exhausted.
        """
        cap = min(self.cap or p, p)
        if self.mode == SizeMode.LARS:
            target = current_size + 1
        elif self.mode == SizeMode.FIXED:
            target = current_size + self.k
        else:
            target = next((t for t in self.targets if t > current_size), p)
        return min(target, cap)

    def describe(self) -> str:
        if self.mode == SizeMode.FIXED:
            return f"fixed:{self.k}"
        if self.mode == SizeMode.TARGETS:
            return "targets:" + ",".join(str(t) for t in self.targets)
        return "lars"


class PathPolicy(BaseModel):
    """Which grid / stopping rule generates the (lambda_t, eps_t) sequences"""

    variant: PolicyVariant
    target_lambda: float = Field(..., ge=0)
    target_eps: float = Field(..., ge=0)

    # Policy parameters (defaults resolved through POLICY_DEFAULTS)
    r: Optional[float] = Field(None, gt=0, lt=1)
    c: Optional[float] = Field(None, gt=0, le=1)
    eps_step: Optional[float] = Field(None, ge=0, description="Fixed FastPath eps_t")
    T: Optional[int] = Field(None, ge=2)
    auto_T: bool = False
    ratio: Optional[float] = Field(None, gt=0, lt=1)
    grid: Optional[List[float]] = None
    refine: Optional[PolicyVariant] = None
    schedule: Optional[SizeSchedule] = None

    # Clipping and stopping
    clip: bool = True
    clip_lambda_floor: float = Field(settings.LAMBDA_CLIP_RATIO, ge=0)
    clip_eps_floor: float = Field(settings.EPS_CLIP_RATIO, ge=0)
    early_stop: bool = True

    @field_validator("grid")
    @classmethod
    def validate_grid(cls, v):
        if v is None:
            return v
        if not v:
            raise ValueError("grid must not be empty")
        if any(g <= 0 for g in v):
            raise ValueError("grid values must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("grid must be sorted strictly decreasing")
        return v

    @model_validator(mode="after")
    def validate_variant(self):
        if self.variant == PolicyVariant.PRESCRIBED:
            if not self.grid:
                raise ValueError("prescribed policy needs a grid")
            if self.target_lambda != self.grid[-1]:
                raise ValueError("prescribed policy target must be the last grid point")
        elif self.grid is not None:
            raise ValueError("a grid is only accepted by the prescribed policy")
        if self.refine not in (None, PolicyVariant.SIMPLIFIED, PolicyVariant.FASTPATH):
            raise ValueError("grid refinement supports the simplified or fastpath rules")
        if self.refine is not None and self.variant != PolicyVariant.PRESCRIBED:
            raise ValueError("refine only applies to the prescribed policy")
        if self.T is not None and self.ratio is not None:
            raise ValueError("geometric grid takes either T or ratio, not both")
        return self

    @property
    def is_grid(self) -> bool:
        return self.variant in (PolicyVariant.GEOMETRIC, PolicyVariant.PRESCRIBED)

    @property
    def effective_r(self) -> float:
        if self.r is not None:
            return self.r
        defaults = POLICY_DEFAULTS.get(self.variant.value, {})
        return defaults.get("r", POLICY_DEFAULTS["simplified"]["r"])

    @property
    def effective_c(self) -> float:
        return self.c if self.c is not None else POLICY_DEFAULTS["adaptive"]["c"]

    def describe(self) -> str:
        if self.variant in (PolicyVariant.FASTPATH, PolicyVariant.SIMPLIFIED):
            return f"{self.variant.value}(r={self.effective_r})"
        if self.variant == PolicyVariant.ADAPTIVE_R:
            return f"adaptive(c={self.effective_c})"
        if self.variant == PolicyVariant.GEOMETRIC:
            size = "auto" if self.auto_T else (self.T or self.ratio or settings.GEOMETRIC_DEFAULT_T)
            return f"geometric({size})"
        if self.variant == PolicyVariant.PRESCRIBED:
            refine = self.refine.value if self.refine else "none"
            return f"prescribed({len(self.grid)} points, refine={refine})"
        return f"active({(self.schedule or SizeSchedule()).describe()})"

    # Convenience constructors

    @classmethod
    def fastpath(cls, target_lambda: float, target_eps: float, r: Optional[float] = None, **kw):
        return cls(variant=PolicyVariant.FASTPATH, target_lambda=target_lambda, target_eps=target_eps, r=r, **kw)

    @classmethod
    def simplified(cls, target_lambda: float, target_eps: float, r: Optional[float] = None, **kw):
        return cls(variant=PolicyVariant.SIMPLIFIED, target_lambda=target_lambda, target_eps=target_eps, r=r, **kw)

    @classmethod
    def adaptive(cls, target_lambda: float, target_eps: float, c: Optional[float] = None, **kw):
        return cls(variant=PolicyVariant.ADAPTIVE_R, target_lambda=target_lambda, target_eps=target_eps, c=c, **kw)

    @classmethod
    def geometric(cls, target_lambda: float, target_eps: float, T: Optional[int] = None, **kw):
        return cls(variant=PolicyVariant.GEOMETRIC, target_lambda=target_lambda, target_eps=target_eps, T=T, **kw)

    @classmethod
    def prescribed(cls, grid: List[float], target_eps: float, refine: Optional[PolicyVariant] = None, **kw):
        return cls(variant=PolicyVariant.PRESCRIBED, target_lambda=grid[-1], target_eps=target_eps, grid=list(grid), refine=refine, **kw)

    @classmethod
    def active_set(cls, target_lambda: float, target_eps: float, schedule: Optional[SizeSchedule] = None, **kw):
        return cls(variant=PolicyVariant.ACTIVE_SET, target_lambda=target_lambda, target_eps=target_eps, schedule=schedule or SizeSchedule(), **kw)


# ===============================
# Inner solvers
# ===============================


class InnerSolverConfig(BaseModel):
    """Inner subproblem solver settings"""

    method: SolverMethod = SolverMethod.CD
    gap_check_every: int = Field(settings.GAP_CHECK_EVERY, ge=1)
    max_epochs: int = Field(settings.MAX_EPOCHS, ge=1)
    dynamic_screening: bool = True
    sequential_screening: bool = True
    enforce_monotone_f: bool = True
    working_set: bool = True
    working_set_rule: WorkingSetOrigin = WorkingSetOrigin.PATHWISE_UNSAFE

    @property
    def screening(self) -> bool:
        return self.dynamic_screening or self.sequential_screening


# ===============================
# Datasets
# ===============================


class DatasetSpec(BaseModel):
    """Where the design matrix and response come from"""

    source: DatasetSource
    path: Optional[str] = None
    target_column: Optional[Union[int, str]] = None
    csv_header: bool = True
    n: Optional[int] = Field(None, ge=1)
    p: Optional[int] = Field(None, ge=1)
    zero_frac: float = Field(0.8, ge=0, le=1)
    noise_sd: float = Field(1.0, ge=0)
    seed: int = 0
    n_features: Optional[int] = Field(None, ge=1)
    normalize_columns: bool = False

    @model_validator(mode="after")
    def validate_source(self):
        if self.source == DatasetSource.SYNTHETIC and (self.n is None or self.p is None):
            raise ValueError("synthetic datasets need n and p")
        if self.source in (DatasetSource.CSV, DatasetSource.SVMLIGHT) and not self.path:
            raise ValueError(f"{self.source.value} datasets need a path")
        if self.source == DatasetSource.CSV and self.target_column is None:
            raise ValueError("csv datasets need a target column")
        if self.n_features is not None and self.source != DatasetSource.SVMLIGHT:
            raise ValueError("n_features only applies to svmlight datasets")
        return self

    def describe(self) -> str:
        if self.source == DatasetSource.SYNTHETIC:
            return (
                f"synthetic(n={self.n}, p={self.p}, zero_frac={self.zero_frac}, "
                f"noise_sd={self.noise_sd}, seed={self.seed})"
            )
        return f"{self.source.value}({self.path})"


# ===============================
# Path traces
# ===============================


class StepRecord(BaseModel):
    """Per-step record of a path run"""

    t: int
    lambda_t: float
    eps_t: Optional[float] = None
    inner_iterations: int = 0
    coordinate_updates: int = 0
    gap_local: float
    gap_at_target: float
    e_t: float
    delta_t: float
    active_set_size: int
    working_set_size: int
    f_val: float
    wall_nanoseconds: int = 0
    monotone: bool = True
    size_target: Optional[int] = None
    screening_saturated: Optional[bool] = None
    working_set_retries: int = 0
    active_indices: Optional[List[int]] = None


class StepCertificate(BaseModel):
    """Per-step slack values of the progress and contraction certificates"""

    t: int
    progress_slack: Optional[float] = None
    contraction: Optional[float] = None
    stopping_condition: Optional[bool] = None
    residual_decrease: Optional[bool] = None


class GridSolution(BaseModel):
    """Certified solution recorded for one grid point of a grid policy"""

    lambda_grid: float
    gap: float
    nnz: int
    step: int


class PathTrace(BaseModel):
    steps: List[StepRecord] = Field(default_factory=list)
    terminated_by: Optional[TerminationReason] = None

    @property
    def accepted_steps(self) -> int:
        """Number of steps after the initialization at lambda_0."""
        return sum(1 for s in self.steps if s.t > 0)

    @property
    def total_epochs(self) -> int:
        return sum(s.inner_iterations for s in self.steps)

    @property
    def total_updates(self) -> int:
        return sum(s.coordinate_updates for s in self.steps)

    @property
    def wall_nanoseconds(self) -> int:
        return sum(s.wall_nanoseconds for s in self.steps)


class TraceMeta(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    policy: str
    r: Optional[float] = None
    eps: float
    lambda_: float = Field(..., alias="lambda")
    dataset: str
    seed: Optional[int] = None
    version: str
    lambda_max: float
    requested_lambda: float
    requested_eps: float
    clipped: bool = False
    terminated_by: Optional[TerminationReason] = None


class TraceDocument(BaseModel):
    """JSON document written for every run"""

    meta: TraceMeta
    steps: List[StepRecord]
    certificates: List[StepCertificate] = Field(default_factory=list)
    grid: List[GridSolution] = Field(default_factory=list)


# ===============================
# CLI
# ===============================


class BenchRow(BaseModel):
    policy: str
    screening: bool
    working_set: bool
    T: Optional[int] = None
    eps: float
    total_epochs: int = 0
    coordinate_updates: int = 0
    wall_ms: float = 0.0
    final_gap: Optional[float] = None
    status: str = "ok"


class CliConfig(BaseModel):
    """Validated command-line configuration"""

    command: Command
    dataset: Optional[DatasetSpec] = None
    policy: Optional[PathPolicy] = None
    inner: InnerSolverConfig = Field(default_factory=InnerSolverConfig)
    output: Optional[str] = None
    path_csv: Optional[str] = None
    truth_output: Optional[str] = None
    verbosity: int = 0
    record_masks: bool = False
    threads: Optional[int] = Field(None, ge=1)
    trials: int = Field(20, ge=1)
    seed: int = 0
    bench_T: List[int] = Field(default_factory=lambda: [10, 100])
    bench_eps: List[float] = Field(default_factory=lambda: [1e-2, 1e-4, 1e-6, 1e-8])
    bench_policies: List[str] = Field(default_factory=lambda: ["geometric"])
