"""
contpath - Inner Solvers
Cyclic coordinate descent and proximal gradient with gap checks and dynamic screening
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .config import settings
from .exceptions import BudgetExceededError, InvalidArgumentError
from .models import PrimalDualState, Problem, SolverMethod
from .problem import dual_point
from .schemas import InnerSolverConfig
from .screening import feature_distances, safe_radius

# Configure logging
logger = logging.getLogger(__name__)


def soft_threshold(x, tau):
    """ST(x, tau) = sign(x) max(|x| - tau, 0)"""
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def cd_epoch(
    prob: Problem,
    beta: np.ndarray,
    residual: np.ndarray,
    lam: float,
    active: np.ndarray,
) -> int:
    """One cyclic pass over ``active`` in index order.

    beta and residual = y - X beta are updated in place. Returns the number
    of coordinates visited.
    """
    X = prob.X
    norms_sq = X.col_norms_sq
    for j in active:
        nsq = norms_sq[j]
        if nsq == 0.0:
            beta[j] = 0.0
            continue
        rows, col = X.column(j)
        old = beta[j]
        z = old + float(col @ residual[rows]) / nsq
        threshold = lam / nsq
        if z > threshold:
            new = z - threshold
        elif z < -threshold:
            new = z + threshold
        else:
            new = 0.0
        if new != old:
            residual[rows] -= (new - old) * col
            beta[j] = new
    return int(len(active))


def prox_grad_step(
    prob: Problem,
    beta: np.ndarray,
    lam: float,
    step: Optional[float] = None,
    features: Optional[np.ndarray] = None,
    residual: Optional[np.ndarray] = None,
) -> np.ndarray:
    """beta <- ST(beta - s X^T grad f(X beta), s lam) over ``features``.

    The default step is 1 / (nu sigma_max^2(X)). Coordinates outside
    ``features`` are left untouched.
    """
    if step is None:
        step = proximal_step(prob)
    if residual is None:
        residual = prob.y - prob.X.matvec(beta)
    new = np.array(beta, dtype=np.float64, copy=True)
    if features is None:
        grad = -prob.X.rmatvec(residual)
        new = soft_threshold(beta - step * grad, step * lam)
    elif len(features):
        grad = -prob.X.rmatvec(residual, features=features)
        new[features] = soft_threshold(beta[features] - step * grad, step * lam)
    return new


def proximal_step(prob: Problem) -> float:
    sigma_sq = prob.X.spectral_norm_sq
    if sigma_sq == 0.0:
        return 1.0
    return 1.0 / (prob.nu * sigma_sq)


@dataclass
class SubproblemResult:
    """Outcome of one inner solve"""

    state: PrimalDualState
    epochs: int
    coordinate_updates: int
    screened: np.ndarray
    active_sizes: List[int] = field(default_factory=list)
    monotone: bool = True


def _numerical_optimum(prob: Problem, state: PrimalDualState) -> bool:
    return state.gap_local <= 1e-12 * (1.0 + prob.f0)


def _distances(prob: Problem, state: PrimalDualState, restrict: Optional[np.ndarray]) -> np.ndarray:
    """Dual distances; features outside a restriction get -inf and are never screened."""
    if restrict is None:
        return feature_distances(prob, state.theta, state.xt_theta)
    norms = prob.X.col_norms[restrict]
    restricted = np.full(len(restrict), np.inf)
    np.divide(1.0 - np.abs(state.xt_theta), norms, out=restricted, where=norms > 0)
    distances = np.full(prob.p, -np.inf)
    distances[restrict] = restricted
    return distances


def solve_subproblem(
    prob: Problem,
    beta0: np.ndarray,
    lam: float,
    eps: float,
    cfg: Optional[InnerSolverConfig] = None,
    restrict: Optional[np.ndarray] = None,
    screened: Optional[np.ndarray] = None,
    accept: Optional[Callable[[PrimalDualState], bool]] = None,
    f_ceiling: Optional[float] = None,
) -> SubproblemResult:
    """Solve the problem at lam to duality gap <= eps, warm-started at beta0.

    restrict: only optimize these features; the certificate then covers the
        restricted problem and the state is flagged unverified-global.
    screened: boolean mask of features known to vanish at the optimum; they
        are frozen at zero.
    accept: extra stopping test evaluated at every gap check.
    f_ceiling: keep iterating until f(X beta) <= f_ceiling. Relaxed, with a
        warning, once the gap reaches numerical optimality.

    Raises BudgetExceededError carrying the best state after max_epochs.
    """
    cfg = cfg or InnerSolverConfig()
    if not eps > 0:
        raise InvalidArgumentError(f"eps must be positive, got {eps}")

    beta = np.array(beta0, dtype=np.float64, copy=True)
    if beta.shape != (prob.p,):
        raise InvalidArgumentError(f"beta0 must have length p={prob.p}, got shape {beta.shape}")
    screened = np.zeros(prob.p, dtype=bool) if screened is None else screened.copy()

    if restrict is not None:
        restrict = np.asarray(restrict, dtype=np.intp)
        outside = np.ones(prob.p, dtype=bool)
        outside[restrict] = False
        beta[outside] = 0.0
    beta[screened] = 0.0
    residual = prob.y - prob.X.matvec(beta)

    def candidates() -> np.ndarray:
        if restrict is None:
            return np.flatnonzero(~screened)
        return restrict[~screened[restrict]]

    active = candidates()
    step = proximal_step(prob) if cfg.method == SolverMethod.PROX_GRAD else None
    epochs, updates = 0, 0
    best: Optional[PrimalDualState] = None
    sizes: List[int] = []
    monotone = True

    while True:
        if epochs % cfg.gap_check_every == 0:
            state = dual_point(prob, beta.copy(), lam, features=restrict, residual=residual.copy())
            if best is None or state.gap_local < best.gap_local:
                best = state

            gap_ok = state.gap_local <= eps
            accept_ok = accept is None or accept(state)
            f_ok = f_ceiling is None or state.f_val <= f_ceiling
            if gap_ok and accept_ok and not f_ok and _numerical_optimum(prob, state):
                logger.warning(
                    f"f increased at numerical optimum (lambda={lam:.6e}, "
                    f"f={state.f_val:.12e} > {f_ceiling:.12e}); accepting without monotonicity"
                )
                monotone, f_ok = False, True
            if gap_ok and accept_ok and f_ok:
                logger.debug(
                    f"Inner solve at lambda={lam:.6e} converged: gap={state.gap_local:.3e} "
                    f"epochs={epochs} active={len(active)}"
                )
                break

            if cfg.dynamic_screening:
                radius = safe_radius(state.gap_local, lam, prob)
                distances = _distances(prob, state, restrict)
                newly = (distances > radius + settings.SCREENING_MARGIN) & ~screened
                if newly.any():
                    for j in np.flatnonzero(newly & (beta != 0)):
                        rows, col = prob.X.column(j)
                        residual[rows] += beta[j] * col
                        beta[j] = 0.0
                    screened |= newly
                    active = candidates()
            sizes.append(int(len(active)))

            if epochs >= cfg.max_epochs:
                logger.error(
                    f"Inner solve at lambda={lam:.6e} exhausted {cfg.max_epochs} epochs "
                    f"(best gap {best.gap_local:.3e}, eps {eps:.3e})"
                )
                raise BudgetExceededError(
                    f"Inner solver exceeded {cfg.max_epochs} epochs at lambda={lam:.6e}",
                    best_state=best,
                    epochs=epochs,
                )

        if cfg.method == SolverMethod.CD:
            updates += cd_epoch(prob, beta, residual, lam, active)
        else:
            beta = prox_grad_step(prob, beta, lam, step, features=active, residual=residual)
            residual = prob.y - prob.X.matvec(beta)
            updates += int(len(active))
        epochs += 1

    return SubproblemResult(
        state=state,
        epochs=epochs,
        coordinate_updates=updates,
        screened=screened,
        active_sizes=sizes,
        monotone=monotone,
    )
