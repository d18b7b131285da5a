"""
contpath - Domain Models
Enumerations and the numerical domain types shared by every module
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy import sparse

from .config import settings
from .exceptions import InvalidArgumentError

# Configure logging
logger = logging.getLogger(__name__)


class PolicyVariant(str, Enum):
    """Rules generating the sequences of regularization parameters and tolerances"""

    FASTPATH = "fastpath"
    SIMPLIFIED = "simplified"
    ADAPTIVE_R = "adaptive"
    GEOMETRIC = "geometric"
    PRESCRIBED = "prescribed"
    ACTIVE_SET = "active"


class TerminationReason(str, Enum):
    """Why a path run stopped"""

    REACHED_LAMBDA = "reached_lambda"
    TARGET_GAP_MET = "target_gap_met"
    BUDGET_EXCEEDED = "budget_exceeded"


class SolverMethod(str, Enum):
    """Inner subproblem solvers"""

    CD = "cd"
    PROX_GRAD = "pg"


class WorkingSetOrigin(str, Enum):
    """How a working set was built"""

    PATHWISE_UNSAFE = "pathwise_unsafe"
    GAP_SAFE = "gap_safe"
    STRONG_RULE = "strong_rule"
    DISTANCE_RANK = "distance_rank"


class SizeMode(str, Enum):
    """Active-set size schedules"""

    FIXED = "fixed"
    TARGETS = "targets"
    LARS = "lars"


class DatasetSource(str, Enum):
    """Where a design matrix comes from"""

    CSV = "csv"
    SVMLIGHT = "svmlight"
    SYNTHETIC = "synthetic"


class Command(str, Enum):
    """CLI commands"""

    SOLVE = "solve"
    PATH = "path"
    BENCH = "bench"
    SYNTH = "synth"
    VALIDATE = "validate"


# ===============================
# Problem data
# ===============================


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Design matrix stored dense column-major or sparse compressed-column.

    Column norms are computed once at construction. Instances are immutable
    and safe to share between threads.
    """

    data: Union[np.ndarray, sparse.csc_matrix]
    col_norms: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = self.data
        if sparse.issparse(X):
            X = sparse.csc_matrix(X, dtype=np.float64)
            X.sum_duplicates()
            X.sort_indices()
            norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=0)).ravel())
        else:
            X = np.asfortranarray(np.asarray(X, dtype=np.float64))
            if X.ndim != 2:
                raise InvalidArgumentError(
                    f"Design matrix must be 2-dimensional, got shape {X.shape}"
                )
            norms = np.sqrt(np.einsum("ij,ij->j", X, X))

        n, p = X.shape
        if n < 1 or p < 1:
            raise InvalidArgumentError(f"Design matrix must be non-empty, got {X.shape}")

        object.__setattr__(self, "data", X)
        object.__setattr__(self, "col_norms", norms)

    @classmethod
    def from_array(cls, X) -> "DesignMatrix":
        if isinstance(X, DesignMatrix):
            return X
        return cls(data=X)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.data)

    @cached_property
    def col_norms_sq(self) -> np.ndarray:
        return self.col_norms**2

    def matvec(self, beta: np.ndarray) -> np.ndarray:
        """X beta"""
        if self.is_sparse:
            return np.asarray(self.data @ beta).ravel()
        return self.data @ beta

    def rmatvec(self, v: np.ndarray, features: Optional[np.ndarray] = None) -> np.ndarray:
        """X^T v, optionally restricted to a subset of columns."""
        X = self.data
        if features is not None:
            X = X[:, features]
        if self.is_sparse:
            return np.asarray(X.T @ v).ravel()
        if settings.DETERMINISTIC:
            # einsum without optimize never dispatches to threaded BLAS
            return np.einsum("ij,i->j", X, v, optimize=False)
        return X.T @ v

    def column(self, j: int):
        """(row indices, values) of column j; row indices is a slice for dense storage."""
        if self.is_sparse:
            start, stop = self.data.indptr[j], self.data.indptr[j + 1]
            return self.data.indices[start:stop], self.data.data[start:stop]
        return slice(None), self.data[:, j]

    def toarray(self) -> np.ndarray:
        if self.is_sparse:
            return self.data.toarray()
        return np.asarray(self.data)

    @cached_property
    def spectral_norm_sq(self) -> float:
        """Largest eigenvalue of X^T X estimated by seeded power iteration."""
        rng = np.random.default_rng(settings.POWER_ITER_SEED)
        v = rng.standard_normal(self.p)
        v /= np.linalg.norm(v)
        estimate = 0.0
        for it in range(settings.POWER_ITER_MAX):
            w = self.rmatvec(self.matvec(v))
            new_estimate = float(v @ w)
            w_norm = np.linalg.norm(w)
            if w_norm == 0.0:
                return 0.0
            v = w / w_norm
            if abs(new_estimate - estimate) <= settings.POWER_ITER_TOL * new_estimate:
                estimate = new_estimate
                break
            estimate = new_estimate
        logger.debug(f"Power iteration: sigma_max^2 ~ {estimate:.6e} after {it + 1} iterations")
        return estimate


@dataclass(frozen=True, eq=False)
class Problem:
    """Lasso problem min_beta f(X beta) + lam ||beta||_1 with f(z) = 0.5 ||y - z||^2.

    mu and nu are the strong convexity and smoothness constants of f. The
    quadratic loss has mu = nu = 1; more conservative constants
    (mu <= 1 <= nu) are accepted so policies can be exercised generically.
    """

    X: DesignMatrix
    y: np.ndarray
    mu: float = 1.0
    nu: float = 1.0
    name: str = "problem"
    lambda_max: float = field(init=False)

    def __post_init__(self):
        X = DesignMatrix.from_array(self.X)
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64).ravel())
        if y.shape[0] != X.n:
            raise InvalidArgumentError(
                f"Response has {y.shape[0]} entries but X has {X.n} rows"
            )
        if not np.all(np.isfinite(y)):
            raise InvalidArgumentError("Response contains non-finite values")
        if not 0 < self.mu <= self.nu:
            raise InvalidArgumentError(
                f"Need 0 < mu <= nu, got mu={self.mu}, nu={self.nu}"
            )
        if not self.mu <= 1.0 <= self.nu:
            raise InvalidArgumentError(
                "The quadratic loss is 1-strongly convex and 1-smooth: need mu <= 1 <= nu"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lambda_max", float(np.max(np.abs(X.rmatvec(y)))))

    @property
    def n(self) -> int:
        return self.X.n

    @property
    def p(self) -> int:
        return self.X.p

    @cached_property
    def f0(self) -> float:
        """f(0) = 0.5 ||y||^2"""
        return 0.5 * float(self.y @ self.y)

    def loss(self, z: np.ndarray) -> float:
        r = self.y - z
        return 0.5 * float(r @ r)

    def loss_gradient(self, z: np.ndarray) -> np.ndarray:
        return z - self.y

    def conjugate_gradient(self, u: np.ndarray) -> np.ndarray:
        """Gradient of the Fenchel conjugate f*(u) = 0.5||y + u||^2 - 0.5||y||^2."""
        return self.y + u


# ===============================
# Iterates and certificates
# ===============================


@dataclass(frozen=True, eq=False)
class PrimalDualState:
    """Primal/dual snapshot (beta, theta) evaluated at one regularization lam."""

    beta: np.ndarray
    theta: np.ndarray
    alpha: float
    zeta: np.ndarray
    lam: float
    gap_local: float
    delta_t: float
    f_val: float
    primal: float
    dual: float
    residual: np.ndarray
    xt_theta: np.ndarray
    verified_global: bool = True

    @cached_property
    def zeta_norm_sq(self) -> float:
        return float(self.zeta @ self.zeta)

    @cached_property
    def theta_norm(self) -> float:
        return float(np.linalg.norm(self.theta))

    @cached_property
    def l1_norm(self) -> float:
        return float(np.abs(self.beta).sum())

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.beta)


@dataclass(frozen=True)
class WarmStartBound:
    """Warm-start decomposition of the target gap of a previous iterate."""

    e_t: float
    v_mu: float
    v_nu: float
    gap_at_target: float

    @property
    def deviation(self) -> float:
        """Gap_lam(beta_t, theta_t) - E_t(lam)"""
        return self.gap_at_target - self.e_t


@dataclass(frozen=True, eq=False)
class SafeRegion:
    """Ball around a dual point guaranteed to contain the dual optimum."""

    center: np.ndarray
    radius: float
    gap: float
    lam: float


@dataclass(frozen=True, eq=False)
class ScreeningReport:
    distances: np.ndarray
    screened: np.ndarray
    active: np.ndarray
    radius: float
    e_lo: float
    e_hi: float

    @property
    def n_active(self) -> int:
        return int(self.active.shape[0])

    @property
    def n_screened(self) -> int:
        return int(self.screened.sum())


@dataclass(frozen=True, eq=False)
class WorkingSet:
    indices: np.ndarray
    threshold: float
    origin: WorkingSetOrigin

    def __len__(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True)
class MembershipBounds:
    """Thresholds on lam' controlling whether feature j joins A_t(lam').

    None marks a rule whose radicand is negative at the current accuracy.
    """

    lo_rule: Optional[float]
    hi_rule: Optional[float]


@dataclass(frozen=True)
class SizeStep:
    """Next regularization parameters controlling the safe active-set size."""

    lambda_keep_below: Optional[float]
    lambda_reach_at: float
    target_size: int
    distance: float
