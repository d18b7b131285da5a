"""
contpath - Continuation
Warm-start gap bounds, stepwise progress and the grid / stopping rules
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from .config import settings
from .exceptions import GridOrderError, InvalidArgumentError, PolicyError
from .models import PolicyVariant, PrimalDualState, Problem, WarmStartBound
from .problem import clamp_gap, eval_dual, eval_primal, gap_at_lambda
from .schemas import PathPolicy

# Configure logging
logger = logging.getLogger(__name__)


def _check_decreasing(lam: float, lambda_t: float, what: str = "lambda") -> None:
    if lam > lambda_t:
        raise InvalidArgumentError(
            f"{what}={lam} must not exceed lambda_t={lambda_t}: bounds assume a decreasing path"
        )


def _check_rate(prob: Problem, r: float) -> None:
    if not 0.0 <= r < prob.mu / prob.nu:
        raise PolicyError(f"Need 0 <= r < mu/nu = {prob.mu / prob.nu}, got r={r}")


def _snap(lam_next: float, lam: float, lambda_t: float) -> float:
    lam_next = min(max(lam_next, lam), lambda_t)
    if lam_next - lam <= settings.LAMBDA_SNAP_TOL * lam:
        return lam
    return lam_next


# ===============================
# Warm-start bounds
# ===============================


def estimation_term(state: PrimalDualState, lam: float) -> float:
    """E_t(lam) = (lam/lam_t) Gap_t + (1 - lam/lam_t) Delta_t"""
    rho = lam / state.lam
    return rho * state.gap_local + (1.0 - rho) * state.delta_t


def warm_start_bound(state: PrimalDualState, lam: float, prob: Problem) -> WarmStartBound:
    """Split the gap of a previous iterate at a smaller lambda.

    The target gap lies within [E_t + V_nu, E_t + V_mu] with
    V_tau = ||zeta_t||^2 (1 - lam/lam_t)^2 / (2 tau).
    """
    _check_decreasing(lam, state.lam)
    rho = lam / state.lam
    spread = state.zeta_norm_sq * (1.0 - rho) ** 2 / 2.0
    primal = eval_primal(prob, state.beta, lam)
    dual = eval_dual(prob, state.theta, lam, xt_theta=state.xt_theta if state.verified_global else None)
    return WarmStartBound(
        e_t=estimation_term(state, lam),
        v_mu=spread / prob.mu,
        v_nu=spread / prob.nu,
        gap_at_target=clamp_gap(primal - dual, scale=abs(primal)),
    )


# ===============================
# FastPath
# ===============================


def fastpath_radicand(state: PrimalDualState, r: float, eps_t: float, prob: Problem, lam: float) -> float:
    """D(eps_t) = (lam_t mu / (alpha_t nu))^2 [(1 - r nu/mu)(1 - lam/lam_t)^2 - 2 nu eps_t / ||zeta_t||^2]"""
    rho = lam / state.lam
    scale = (state.lam * prob.mu / (state.alpha * prob.nu)) ** 2
    budget = (1.0 - r * prob.nu / prob.mu) * (1.0 - rho) ** 2
    return scale * (budget - 2.0 * prob.nu * eps_t / state.zeta_norm_sq)


def next_lambda_fastpath(
    state: PrimalDualState, r: float, eps_t: float, prob: Problem, lam: float
) -> float:
    """lam_{t+1} = lam / (1 - sqrt(D(eps_t))), clamped into [lam, lam_t]."""
    _check_rate(prob, r)
    _check_decreasing(lam, state.lam)
    if eps_t < 0:
        raise InvalidArgumentError(f"eps_t must be nonnegative, got {eps_t}")
    if lam == state.lam or state.zeta_norm_sq == 0.0:
        return lam

    D = fastpath_radicand(state, r, eps_t, prob, lam)
    if D < 0.0:
        # rounding on the default tolerance lands a hair below zero
        if D > -1e-14 * (1.0 - lam / state.lam) ** 2:
            D = 0.0
        else:
            raise PolicyError(
                f"FastPath radicand D(eps_t)={D:.3e} is negative, shrink eps_t={eps_t:.3e}"
            )
    return _snap(lam / (1.0 - math.sqrt(D)), lam, state.lam)


def default_eps_fastpath(state: PrimalDualState, r: float, prob: Problem, lam: float) -> float:
    """eps_t = 0.42 (||zeta_t||^2 / 2nu)(1 - r nu/mu)(1 - lam/lam_t)^2, which keeps D(eps_t) >= 0."""
    _check_rate(prob, r)
    _check_decreasing(lam, state.lam)
    rho = lam / state.lam
    eps_t = (
        settings.DEFAULT_EPS_FACTOR
        * state.zeta_norm_sq / (2.0 * prob.nu)
        * (1.0 - r * prob.nu / prob.mu)
        * (1.0 - rho) ** 2
    )
    if state.zeta_norm_sq > 0:
        assert fastpath_radicand(state, r, eps_t, prob, lam) >= -1e-14
    return eps_t


def stopping_condition_fastpath(e_prev: float, e_next: float, eps_t: float, r: float) -> bool:
    """E_{t+1} <= (1 - r) E_t + eps_t"""
    return e_next <= (1.0 - r) * e_prev + eps_t


# ===============================
# Simplified policies
# ===============================


def next_lambda_simplified(lambda_t: float, lam: float, r: float) -> float:
    """Solve (1 - lam/lam_{t+1})^2 = (1 - r)(1 - lam/lam_t)^2 for lam_{t+1}."""
    if not 0.0 <= r < 1.0:
        raise PolicyError(f"Need 0 <= r < 1, got r={r}")
    _check_decreasing(lam, lambda_t)
    if lam == lambda_t:
        return lam
    lam_next = lam / (1.0 - math.sqrt(1.0 - r) * (1.0 - lam / lambda_t))
    return _snap(lam_next, lam, lambda_t)


def simplified_tolerance(lambda_next: float, lam: float, eps: float) -> float:
    """eps_{t+1} = (lam_{t+1} / lam) eps"""
    if lambda_next < lam:
        raise InvalidArgumentError(
            f"lambda_next={lambda_next} is below the target lambda={lam}"
        )
    return (lambda_next / lam) * eps


def adaptive_r(prob: Problem, lambda_t: float, lam: float) -> float:
    """r_t = (mu/nu)(lam/lam_t)"""
    _check_decreasing(lam, lambda_t)
    return (prob.mu / prob.nu) * (lam / lambda_t)


def clip_targets(
    lam: float,
    eps: float,
    lambda0: float,
    f0: float,
    lambda_ratio: float = settings.LAMBDA_CLIP_RATIO,
    eps_ratio: float = settings.EPS_CLIP_RATIO,
) -> Tuple[float, float]:
    """max(lam, lam_0 * 1e-3) and max(eps, f(0) * 1e-8) by default."""
    return max(lam, lambda0 * lambda_ratio), max(eps, f0 * eps_ratio)


def max_grid_size(gap0: float, eps: float, r: float) -> int:
    """Steps a linear-rate path needs to shrink gap0 below eps: ceil(log(eps/gap0) / log(1 - r))."""
    if not 0.0 < r < 1.0:
        raise InvalidArgumentError(f"Need 0 < r < 1, got r={r}")
    if eps <= 0.0:
        raise InvalidArgumentError(f"eps must be positive, got {eps}")
    if eps >= gap0:
        return 0
    steps = math.log(eps / gap0) / math.log(1.0 - r)
    return int(math.ceil(steps - 1e-12))


# ===============================
# Certificates
# ===============================


def stepwise_progress_certificate(
    state_t: PrimalDualState, state_t1: PrimalDualState, prob: Problem, lam: float
) -> Optional[float]:
    """Slack of the stepwise progress inequality between two consecutive states.

    Returns (E_{t+1} - E_t - delta_t ||zeta_t||^2 / 2nu) - (G_{t+1} - G_t), where
    G is the gap at the target lam. A nonnegative value certifies the step.
    Returns None when f(X beta) increased, in which case the inequality
    does not apply.
    """
    if state_t1.f_val > state_t.f_val:
        logger.debug(
            f"Progress certificate inapplicable: f increased {state_t.f_val:.6e} -> {state_t1.f_val:.6e}"
        )
        return None

    ratio = state_t.alpha * prob.nu / (state_t.lam * prob.mu)
    delta = (1.0 - lam / state_t.lam) ** 2 - ratio**2 * (1.0 - lam / state_t1.lam) ** 2
    rhs = (
        estimation_term(state_t1, lam)
        - estimation_term(state_t, lam)
        - delta * state_t.zeta_norm_sq / (2.0 * prob.nu)
    )
    lhs = gap_at_lambda(prob, state_t1, lam) - gap_at_lambda(prob, state_t, lam)
    return rhs - lhs


def residual_decrease_holds(state_t: PrimalDualState, state_t1: PrimalDualState, prob: Problem) -> bool:
    """||zeta_{t+1}||^2 <= (nu/mu)(alpha_t/lam_t)^2 ||zeta_t||^2 up to rounding."""
    bound = (prob.nu / prob.mu) * (state_t.alpha / state_t.lam) ** 2 * state_t.zeta_norm_sq
    return state_t1.zeta_norm_sq <= bound * (1.0 + 1e-12) + 1e-300


# ===============================
# Prescribed grids
# ===============================


def check_grid(grid) -> List[float]:
    grid = [float(g) for g in grid]
    if not grid:
        raise InvalidArgumentError("grid must not be empty")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise GridOrderError("grid must be sorted strictly decreasing")
    return grid


def prescribed_grid_refine(grid, policy: PathPolicy) -> List[Tuple[float, float, bool]]:
    """Expand a decreasing grid into (lambda, eps, is_grid_point) triples.

    Every grid point keeps the target tolerance. With a simplified refinement
    the segment towards the next grid point b is filled with the simplified
    recurrence aimed at b, each inserted point carrying the tolerance
    (lambda/b) eps, until the relative spacing 1 - b/lambda drops to
    REFINE_MIN_GAP. FastPath refinement depends on the iterates and happens
    while the path runs, so the grid is returned as is.
    """
    grid = check_grid(grid)
    eps = policy.target_eps
    points = [(grid[0], eps, True)]
    refine = policy.refine if policy.refine == PolicyVariant.SIMPLIFIED else None

    for a, b in zip(grid, grid[1:]):
        if refine is not None:
            lam_t = a
            for _ in range(settings.MAX_PATH_STEPS):
                if 1.0 - b / lam_t <= settings.REFINE_MIN_GAP:
                    break
                lam_t = next_lambda_simplified(lam_t, b, policy.effective_r)
                if lam_t <= b:
                    break
                points.append((lam_t, simplified_tolerance(lam_t, b, eps), False))
        points.append((b, eps, True))

    n_inserted = len(points) - len(grid)
    if n_inserted:
        logger.debug(f"Grid refinement inserted {n_inserted} points between {len(grid)} grid points")
    return points


def geometric_grid(lambda0: float, lam: float, T: Optional[int] = None, ratio: Optional[float] = None) -> np.ndarray:
    """Decreasing geometric grid from lambda0 to lam.

    With T points the ratio is s = (lam/lambda0)^(1/(T-1)); with an explicit
    ratio the grid is lambda0 s^k while above lam, closed by lam itself.
    """
    if lam >= lambda0:
        return np.array([lam])
    if ratio is not None:
        count = int(math.floor(math.log(lam / lambda0) / math.log(ratio))) + 1
        grid = lambda0 * ratio ** np.arange(count)
        grid = grid[grid > lam * (1.0 + settings.LAMBDA_SNAP_TOL)]
        return np.append(grid, lam)
    T = T or settings.GEOMETRIC_DEFAULT_T
    if T < 2:
        raise InvalidArgumentError(f"A geometric grid needs T >= 2, got {T}")
    grid = np.geomspace(lambda0, lam, T)
    grid[0], grid[-1] = lambda0, lam
    return grid
